#pragma once

#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace lera::test_support {

// In-process chat server: replies with queued status codes (200 once drained)
// and records every request.
class MockChatServer {
 public:
  MockChatServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      int status = 200;
      {
        std::lock_guard lock(mutex_);
        bodies_.push_back(req.body);
        auth_.push_back(req.get_header_value("Authorization"));
        if (!statuses_.empty()) {
          status = statuses_.front();
          statuses_.pop_front();
        }
      }
      res.status = status;
      if (status == 200) {
        const auto body = nlohmann::json::parse(req.body);
        const auto& content = body["messages"][1]["content"];
        const std::string echo = content.is_string() ? content.get<std::string>()
                                                     : content[0]["text"].get<std::string>();
        res.set_content(nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo:" + echo}}}}}}}.dump(),
                        "application/json");
      } else {
        res.set_content(R"({"error":"busy"})", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockChatServer() {
    server_.stop();
    thread_.join();
  }

  void queue(std::initializer_list<int> statuses) {
    std::lock_guard lock(mutex_);
    statuses_.insert(statuses_.end(), statuses);
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  std::vector<std::string> bodies() const {
    std::lock_guard lock(mutex_);
    return bodies_;
  }
  std::vector<std::string> auth() const {
    std::lock_guard lock(mutex_);
    return auth_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::deque<int> statuses_;
  std::vector<std::string> bodies_;
  std::vector<std::string> auth_;
};

}  // namespace lera::test_support
