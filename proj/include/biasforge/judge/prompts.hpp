#ifndef BIASFORGE_JUDGE_PROMPTS_HPP
#define BIASFORGE_JUDGE_PROMPTS_HPP

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "biasforge/error.hpp"
#include "biasforge/io.hpp"

namespace biasforge::judge {

inline constexpr std::string_view kDefaultDirectPrompt =
    R"(You are reviewing a solution to a programming task.

Task:
{task}

Submitted {language} code:
```
{code}
```

Decide whether the code solves the task for every valid input. Think it through step by step: restate what the task requires, trace the code's logic, and check edge cases and limits. Then finish with a line of the form

Final verdict: correct
or
Final verdict: incorrect
)";

inline constexpr std::string_view kDefaultTestGenerationPrompt =
    R"(You are preparing test cases for a programming task.

Task:
{task}

Write between 3 and 6 test cases that together check the main behaviour and the edge cases of a correct solution. Each case gives the exact standard input and the exact expected standard output. Reply with a JSON array and nothing after it, for example

[{"input": "1 2\n", "expected_output": "3\n"}]
)";

inline constexpr std::string_view kDefaultTestCaseEvaluationPrompt =
    R"(You are reviewing a solution to a programming task using test cases.

Task:
{task}

Test cases:
{test_cases}
Submitted {language} code:
```
{code}
```

For each test case, work out what the code prints for the given input and compare it with the expected output. Use this analysis to decide whether the code solves the task. Finish with a line of the form

Final verdict: correct
or
Final verdict: incorrect
)";

/// Templates with {task}, {code}, {language} and {test_cases} slots.
struct PromptSet {
  std::string direct = std::string(kDefaultDirectPrompt);
  std::string test_generation = std::string(kDefaultTestGenerationPrompt);
  std::string testcase_evaluation = std::string(kDefaultTestCaseEvaluationPrompt);
};

/// Fills the slots in one left-to-right pass; slot markers inside the
/// substituted values are left alone.
inline std::string render(std::string_view tmpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto it = slots.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

/// Loads any of direct.txt, generate_tests.txt and testcase_eval.txt found
/// in `dir`; missing files keep the defaults.
inline PromptSet load_prompts(const std::filesystem::path& dir) {
  PromptSet p;
  if (dir.empty()) return p;
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::ConfigError, "no prompt directory " + dir.string());
  auto maybe = [&](const char* name, std::string& slot) {
    if (std::filesystem::exists(dir / name)) slot = io::read_file(dir / name);
  };
  maybe("direct.txt", p.direct);
  maybe("generate_tests.txt", p.test_generation);
  maybe("testcase_eval.txt", p.testcase_evaluation);
  return p;
}

}  // namespace biasforge::judge

#endif  // BIASFORGE_JUDGE_PROMPTS_HPP
