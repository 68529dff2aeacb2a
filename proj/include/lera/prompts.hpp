#pragma once

// Prompt templates for the Look, Explain and Replan stages. Templates use
// `{{slot}}` placeholders; every slot a template mentions must be filled when
// it is rendered. The built-in set mirrors templates/v1/*.tmpl.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lera/backend.hpp"
#include "lera/plan.hpp"

namespace lera {

struct PromptTemplate {
  std::string system;
  std::string user;
};

struct PromptBundle {
  std::string version;
  PromptTemplate look;
  PromptTemplate explain;
  PromptTemplate replan;
};

inline const std::set<std::string>& prompt_slots() {
  static const std::set<std::string> slots{"instruction",  "first_plan_step",   "plan",
                                           "look_output",  "explain_output",    "action_vocabulary",
                                           "few_shots",    "evidence"};
  return slots;
}

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Slot names referenced by `text`, in order of first appearance.
inline std::vector<std::string> template_slots(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string_view::npos) {
    const std::size_t end = text.find("}}", pos + 2);
    if (end == std::string_view::npos) throw TemplateError("unterminated slot");
    std::string name(text.substr(pos + 2, end - pos - 2));
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    pos = end + 2;
  }
  return out;
}

inline std::string render_template(std::string_view text,
                                   const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    const std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) throw TemplateError("unterminated slot");
    const std::string name(text.substr(open + 2, close - open - 2));
    if (!prompt_slots().contains(name)) throw TemplateError("unknown slot {{" + name + "}}");
    const auto it = values.find(name);
    if (it == values.end()) throw TemplateError("slot {{" + name + "}} not filled");
    out.append(text.substr(pos, open - pos));
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

/// Parses a template file: a "[system]" section followed by a "[user]" section.
inline PromptTemplate parse_template_file(std::string_view text) {
  PromptTemplate t;
  std::string* section = nullptr;
  for (std::string_view line : detail::split_lines(text)) {
    if (line == "[system]") {
      section = &t.system;
      continue;
    }
    if (line == "[user]") {
      section = &t.user;
      continue;
    }
    if (!section) {
      if (detail::trim(line).empty()) continue;
      throw TemplateError("text before [system] section");
    }
    section->append(line);
    section->push_back('\n');
  }
  for (std::string* s : {&t.system, &t.user})
    while (!s->empty() && s->back() == '\n') s->pop_back();
  for (const auto& s : template_slots(t.system + t.user))
    if (!prompt_slots().contains(s)) throw TemplateError("unknown slot {{" + s + "}}");
  return t;
}

namespace detail {

inline constexpr std::string_view kLookTemplate = R"TMPL([system]
[[lera:step=look]]
You are the perception module of a robot that follows a step-by-step plan.
Key facts about the environment:
- The robot acts only through high-level actions: locate, pick, place, goto, open, close, put, toggle_on, toggle_off.
- Objects may fall out of the gripper while being picked or placed; fallen objects lie on the table.
- Containers and appliances are open or closed; appliances are switched on or off.
The action below just failed. Look at the attached observation and describe the objects that matter for it.
Typical causes: the object fell from the gripper; a door is closed; an appliance is already running; the intended state already holds; the robot is not at the object.
[user]
Failed action: {{first_plan_step}}
Error report: {{evidence}}
Describe the relevant objects, then state the cause on one line starting with "Discrepancy:", or write "No discrepancy found." if the scene looks as expected.
)TMPL";

inline constexpr std::string_view kExplainTemplate = R"TMPL([system]
[[lera:step=explain]]
You are the reasoning module of a robot. A step of its plan has failed.
Think about the instruction, the current plan and the analysis of the scene. Explain what went wrong and propose how the plan should change, with a short justification for every step you propose. There is no required output format.
[user]
Instruction: {{instruction}}
<plan>
{{plan}}
</plan>
<analysis>
{{look_output}}
</analysis>
)TMPL";

inline constexpr std::string_view kReplanTemplate = R"TMPL([system]
[[lera:step=replan]]
You write executable plans for a robot. Output one action per line in the form verb(object) or verb(object, destination), without numbering or commentary. Use only the actions listed below and only objects that exist in the scene. If nothing remains to be done, output <done>.
Available actions:
{{action_vocabulary}}
Examples:
{{few_shots}}
[user]
Instruction: {{instruction}}
Failed action: {{first_plan_step}}
Error report: {{evidence}}
<plan>
{{plan}}
</plan>
<reasoning>
{{explain_output}}
</reasoning>
Corrected plan:
)TMPL";

}  // namespace detail

inline const std::map<std::string, std::string_view>& builtin_template_files() {
  static const std::map<std::string, std::string_view> files{
      {"look.tmpl", detail::kLookTemplate},
      {"explain.tmpl", detail::kExplainTemplate},
      {"replan.tmpl", detail::kReplanTemplate}};
  return files;
}

inline PromptBundle default_prompts() {
  return {"v1", parse_template_file(detail::kLookTemplate),
          parse_template_file(detail::kExplainTemplate),
          parse_template_file(detail::kReplanTemplate)};
}

inline const PromptBundle& builtin_prompts() {
  static const PromptBundle bundle = default_prompts();
  return bundle;
}

/// Loads look.tmpl, explain.tmpl and replan.tmpl from a directory; the
/// directory name is the bundle version.
inline PromptBundle load_prompts(const std::filesystem::path& dir) {
  auto read = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw TemplateError("cannot read " + (dir / name).string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_template_file(ss.str());
  };
  PromptBundle b{dir.filename().string(), read("look.tmpl"), read("explain.tmpl"),
                 read("replan.tmpl")};
  const auto shots = template_slots(b.replan.system + b.replan.user);
  if (std::find(shots.begin(), shots.end(), "few_shots") == shots.end())
    throw TemplateError("replan template must contain {{few_shots}}");
  return b;
}

inline std::string action_vocabulary(Family family) {
  if (family == Family::tabletop)
    return "locate(x): move the arm to object x; needed before pick(x) or place(x)\n"
           "pick(x): grasp block x; the gripper must be empty\n"
           "place(y): release the held block into bowl y or onto block y";
  return "goto(x): walk to object x; needed before acting on it\n"
         "pick(x): grasp item x; the gripper must be empty\n"
         "open(x): open the door of container or appliance x\n"
         "close(x): close the door of container or appliance x\n"
         "put(x, y): put the held item x into container or appliance y; y must be open\n"
         "toggle_on(x): switch appliance x on; its door must be closed\n"
         "toggle_off(x): switch appliance x off";
}

/// Two worked examples per family: retrying after a drop, and skipping a step
/// whose effect already holds.
inline std::string few_shot_examples(Family family) {
  if (family == Family::tabletop)
    return "Failed action: pick(green_block)\n"
           "Error report: pick(green_block) completed but gripper is empty\n"
           "<plan>\npick(green_block)\nlocate(blue_bowl)\nplace(blue_bowl)\n</plan>\n"
           "Corrected plan:\n"
           "locate(green_block)\npick(green_block)\nlocate(blue_bowl)\nplace(blue_bowl)\n"
           "\n"
           "Failed action: pick(red_block)\n"
           "Error report: pick(red_block) could not be executed\n"
           "<plan>\npick(red_block)\nlocate(red_bowl)\nplace(red_bowl)\n</plan>\n"
           "Corrected plan:\n"
           "locate(red_bowl)\nplace(red_bowl)";
  return "Failed action: pick(apple)\n"
         "Error report: pick(apple) completed but gripper is empty\n"
         "<plan>\npick(apple)\ngoto(fridge)\nput(apple, fridge)\nclose(fridge)\n</plan>\n"
         "Corrected plan:\n"
         "goto(apple)\npick(apple)\ngoto(fridge)\nput(apple, fridge)\nclose(fridge)\n"
         "\n"
         "Failed action: open(fridge)\n"
         "Error report: open(fridge) could not be executed\n"
         "<plan>\nopen(fridge)\nput(apple, fridge)\nclose(fridge)\n</plan>\n"
         "Corrected plan:\n"
         "put(apple, fridge)\nclose(fridge)";
}

}  // namespace lera
