#include <gtest/gtest.h>

#include <set>
#include <string>

#include "biasforge/syntax/comments.hpp"
#include "biasforge/syntax/identifiers.hpp"
#include "biasforge/syntax/insertion.hpp"
#include "biasforge/syntax/profile.hpp"
#include "support.hpp"

using namespace biasforge;
using namespace biasforge::syntax;

namespace {

std::set<std::string> renameable_names(const IdentifierSet& ids) {
  std::set<std::string> out;
  for (const auto& r : ids.renameable) out.insert(r.name);
  return out;
}

ExclusionReason reason_of(const IdentifierSet& ids, std::string_view name) {
  const ExcludedName* e = ids.find_excluded(name);
  EXPECT_NE(e, nullptr) << name;
  return e ? e->reason : ExclusionReason::Reserved;
}

// Replaces every renameable occurrence with "q<name><suffix>".
std::string rename_all(std::string_view src, const IdentifierSet& ids, const std::string& suffix) {
  std::vector<std::pair<ByteRange, std::string>> edits;
  for (const auto& r : ids.renameable) {
    for (auto occ : r.occurrences) edits.push_back({occ, "q" + r.name + suffix});
  }
  std::sort(edits.begin(), edits.end(), [](auto& a, auto& b) { return a.first.begin > b.first.begin; });
  std::string out(src);
  for (auto& [range, text] : edits) out.replace(range.begin, range.end - range.begin, text);
  return out;
}

}  // namespace

TEST(Profile, CommentTokens) {
  EXPECT_EQ(profile(Language::Python).line_comment_token, "#");
  for (Language l : {Language::Cpp, Language::Java, Language::JavaScript, Language::Go}) {
    EXPECT_EQ(profile(l).line_comment_token, "//");
  }
  for (Language l : kAllLanguages) EXPECT_FALSE(profile(l).reserved_words.empty());
}

TEST(Parse, EmptySourceHasNoItems) {
  for (Language l : kAllLanguages) {
    SyntaxTree t = parse("", l);
    EXPECT_TRUE(t.top_level_items().empty()) << to_string(l);
  }
}

TEST(Parse, CppMainIsOneFunctionDefinition) {
  SyntaxTree t = parse("int main(){return 0;}", Language::Cpp);
  auto items = t.top_level_items();
  ASSERT_EQ(items.size(), 1u);
  EXPECT_EQ(items[0].type(), "function_definition");
}

TEST(Parse, SyntaxErrorCarriesLocation) {
  try {
    parse("int main() {\n  return 0\n}\n", Language::Cpp);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_GE(e.where().line, 2u);
  }
}

TEST(Parse, PythonIndentationErrorsMatchInterpreter) {
  const std::vector<std::pair<std::string, std::uint32_t>> bad = {
      {"def f():\n    x = 1\n      y = 2\n", 3},
      {"def f():\n\tx = 1\n        y = 2\n", 3},
      {"if True:\nx = 1\n", 2},
      {"if True:\n    x = 1\n  y = 2\n", 3},
      {"x = 1\n    y = 2\n", 2},
  };
  bool oracle = testsupport::have("python3");
  auto dir = testsupport::fresh_dir("indent");
  for (const auto& [src, line] : bad) {
    try {
      parse(src, Language::Python);
      ADD_FAILURE() << "accepted:\n" << src;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.where().line, line) << src;
    }
    if (oracle) {
      testsupport::write(dir / "m.py", src);
      auto [rc, out] = testsupport::shell("python3 -m py_compile " + (dir / "m.py").string() + " 2>&1");
      EXPECT_NE(rc, 0) << "interpreter accepted:\n" << src;
      EXPECT_NE(out.find("line " + std::to_string(line)), std::string::npos) << out;
    }
  }
  const std::vector<std::string> good = {
      "def f(a,\n        b):\n    return (a +\n            b)\n",
      "x = (1 +\n  2)\n",
      "s = '''\n  x\n'''\nif s:\n    pass\n",
      "x = [1,\n2]\ny = 1 + \\\n  2\n",
      "class A:\n    def m(self):\n        pass\n\n    # c\n    z = 1\n",
      "if a:\n    if b:\n        pass\nelse:\n    pass\n",
  };
  for (const auto& src : good) EXPECT_NO_THROW(parse(src, Language::Python)) << src;
}

TEST(Identifiers, PythonLoopExample) {
  auto ids = collect_renameable_identifiers("total_sum = 0\nfor x in data:\n    total_sum += x\n", Language::Python);
  EXPECT_EQ(renameable_names(ids), (std::set<std::string>{"total_sum", "x"}));
  EXPECT_EQ(reason_of(ids, "data"), ExclusionReason::Builtin);
  const auto* ts = ids.find_renameable("total_sum");
  ASSERT_NE(ts, nullptr);
  EXPECT_EQ(ts->occurrences.size(), 2u);
}

TEST(Identifiers, EmptySource) {
  for (Language l : kAllLanguages) EXPECT_TRUE(collect_renameable_identifiers("", l).empty());
}

TEST(Identifiers, GoAddExample) {
  std::string src = "package main\n\nfunc add(a int, b int) int { return a + b }\n\nfunc main() { println(add(1, 2)) }\n";
  auto ids = collect_renameable_identifiers(src, Language::Go);
  EXPECT_EQ(renameable_names(ids), (std::set<std::string>{"a", "b"}));
  EXPECT_EQ(reason_of(ids, "add"), ExclusionReason::FunctionName);
  EXPECT_EQ(reason_of(ids, "int"), ExclusionReason::TypeName);
}

TEST(Identifiers, GoRenameCompiles) {
  if (!testsupport::have("go")) GTEST_SKIP() << "go not installed";
  std::string src = "package main\n\nfunc add(a int, b int) int { return a + b }\n\nfunc main() { println(add(1, 2)) }\n";
  auto ids = collect_renameable_identifiers(src, Language::Go);
  auto dir = testsupport::fresh_dir("gorename");
  testsupport::write(dir / "main.go", rename_all(src, ids, "Zq"));
  auto [rc, out] = testsupport::shell("cd " + dir.string() + " && GOFLAGS=-mod=mod go run main.go 2>&1");
  EXPECT_EQ(rc, 0) << out;
  EXPECT_EQ(out, "3\n");
}

TEST(Identifiers, ExclusionsByLanguage) {
  {
    std::string src =
        "import sys\nfrom math import gcd as g\ndef solve(n, *rest, k=2):\n    obj.attr = n\n    f(key=n)\n"
        "    return [i for i in range(n)]\nclass A:\n    z = 1\n    def m(self):\n        return self.z\n";
    auto ids = collect_renameable_identifiers(src, Language::Python);
    EXPECT_EQ(renameable_names(ids), (std::set<std::string>{"i", "k", "n", "rest", "self"}));
    EXPECT_EQ(reason_of(ids, "sys"), ExclusionReason::Imported);
    EXPECT_EQ(reason_of(ids, "g"), ExclusionReason::Imported);
    EXPECT_EQ(reason_of(ids, "solve"), ExclusionReason::FunctionName);
    EXPECT_EQ(reason_of(ids, "A"), ExclusionReason::TypeName);
    EXPECT_EQ(reason_of(ids, "z"), ExclusionReason::Field);
    EXPECT_EQ(reason_of(ids, "key"), ExclusionReason::Field);
    EXPECT_EQ(reason_of(ids, "range"), ExclusionReason::Builtin);
    EXPECT_EQ(reason_of(ids, "attr"), ExclusionReason::Field);
  }
  {
    std::string src =
        "#include <bits/stdc++.h>\n#define SQ(x) ((x)*(x))\nusing namespace std;\nstruct P { int x; };\n"
        "int add(int a, int b) { return a + b; }\n"
        "int main() { int n; cin >> n; vector<int> v(n); P p{}; p.x = n; for (auto& e : v) e = SQ(n);\n"
        "  cout << add(n, v[0]) << endl; }\n";
    auto ids = collect_renameable_identifiers(src, Language::Cpp);
    EXPECT_EQ(renameable_names(ids), (std::set<std::string>{"a", "b", "e", "n", "p", "v"}));
    EXPECT_EQ(reason_of(ids, "x"), ExclusionReason::Reserved);  // macro parameter wins over field
    EXPECT_EQ(reason_of(ids, "P"), ExclusionReason::TypeName);
    EXPECT_EQ(reason_of(ids, "add"), ExclusionReason::FunctionName);
    EXPECT_EQ(reason_of(ids, "std"), ExclusionReason::Imported);
    EXPECT_EQ(reason_of(ids, "cout"), ExclusionReason::Builtin);
    const auto* n = ids.find_renameable("n");
    ASSERT_NE(n, nullptr);
    // the vexing-parse argument `v(n)` is an occurrence too
    EXPECT_EQ(n->occurrences.size(), 6u);
  }
  {
    std::string src =
        "import java.util.*;\npublic class Main {\n  static int total = 0;\n  static int twice(int v) { return v * 2; }\n"
        "  public static void main(String[] args) {\n    Scanner sc = new Scanner(System.in);\n"
        "    int n = sc.nextInt();\n    for (int i = 0; i < n; i++) total += twice(i);\n"
        "    System.out.println(total);\n  }\n}\n";
    auto ids = collect_renameable_identifiers(src, Language::Java);
    EXPECT_EQ(renameable_names(ids), (std::set<std::string>{"args", "i", "n", "sc", "total", "v"}));
    EXPECT_EQ(reason_of(ids, "twice"), ExclusionReason::FunctionName);
    EXPECT_EQ(reason_of(ids, "Main"), ExclusionReason::TypeName);
    EXPECT_EQ(reason_of(ids, "java"), ExclusionReason::Imported);
    EXPECT_EQ(reason_of(ids, "nextInt"), ExclusionReason::Field);
  }
  {
    std::string src =
        "const lines = require('fs').readFileSync(0, 'utf8').split('\\n');\n"
        "function solve([a, b = 1], ...rest) { const o = { a, k: b }; return o.k + rest.length; }\n"
        "for (const ch of lines) console.log(solve([ch]));\n";
    auto ids = collect_renameable_identifiers(src, Language::JavaScript);
    EXPECT_EQ(renameable_names(ids), (std::set<std::string>{"b", "ch", "lines", "o", "rest"}));
    EXPECT_EQ(reason_of(ids, "a"), ExclusionReason::Field);  // shorthand property
    EXPECT_EQ(reason_of(ids, "solve"), ExclusionReason::FunctionName);
    EXPECT_EQ(reason_of(ids, "console"), ExclusionReason::Builtin);
  }
}

TEST(Identifiers, ReflectiveUseBlocksRenaming) {
  auto ids = collect_renameable_identifiers("x = 1\nprint(eval('x'))\n", Language::Python);
  EXPECT_TRUE(ids.renameable.empty());
  auto js = collect_renameable_identifiers("let x = 1; console.log(eval('x'));\n", Language::JavaScript);
  EXPECT_TRUE(js.renameable.empty());
}

TEST(Identifiers, PythonMatchesSymtableOracle) {
  if (!testsupport::have("python3")) GTEST_SKIP();
  // Names bound in function or module scopes, as reported by CPython's own
  // symbol tables, minus imports, def/class names and builtins.
  const std::vector<std::string> sources = {
      "import sys\ndef main():\n    n = int(sys.stdin.readline())\n    acc = 0\n    for i in range(n):\n"
      "        acc += i * i\n    print(acc)\nmain()\n",
      "a, b = map(int, input().split())\nc = [x + y for x, y in zip([a], [b])]\nif (m := max(c)) > 0:\n"
      "    print(m)\n",
      "def f(p, q=3, *r, **kw):\n    def g(t):\n        return t + p\n    return g(q)\nprint(f(1))\n",
  };
  auto dir = testsupport::fresh_dir("symtable");
  const std::string script =
      "import symtable, sys, builtins\n"
      "src = open(sys.argv[1]).read()\n"
      "out = set()\n"
      "def visit(t):\n"
      "    if t.get_type() in ('module', 'function'):\n"
      "        for s in t.get_symbols():\n"
      "            if (s.is_assigned() or s.is_parameter()) and not s.is_imported() and not s.is_namespace():\n"
      "                out.add(s.get_name())\n"
      "    for c in t.get_children():\n"
      "        visit(c)\n"
      "visit(symtable.symtable(src, 'm', 'exec'))\n"
      "for n in sorted(out - set(dir(builtins))):\n"
      "    if n.startswith('.'): continue\n"
      "    print(n)\n";
  testsupport::write(dir / "oracle.py", script);
  for (const auto& src : sources) {
    testsupport::write(dir / "m.py", src);
    auto [rc, out] = testsupport::shell("python3 " + (dir / "oracle.py").string() + " " + (dir / "m.py").string());
    ASSERT_EQ(rc, 0);
    std::set<std::string> expected = testsupport::lines_of(out);
    auto ids = collect_renameable_identifiers(src, Language::Python);
    EXPECT_EQ(renameable_names(ids), expected) << src;
  }
}

TEST(Identifiers, StableAndRangesPointAtNames) {
  std::string src = "def solve(a):\n    b = a * 2\n    return b\nprint(solve(3))\n";
  auto first = collect_renameable_identifiers(src, Language::Python);
  auto second = collect_renameable_identifiers(src, Language::Python);
  ASSERT_EQ(first.renameable.size(), second.renameable.size());
  for (std::size_t i = 0; i < first.renameable.size(); ++i) {
    EXPECT_EQ(first.renameable[i].name, second.renameable[i].name);
    EXPECT_EQ(first.renameable[i].occurrences, second.renameable[i].occurrences);
    for (auto r : first.renameable[i].occurrences) {
      EXPECT_EQ(src.substr(r.begin, r.end - r.begin), first.renameable[i].name);
    }
  }
  for (const auto& e : first.excluded) EXPECT_EQ(first.find_renameable(e.name), nullptr);
}

TEST(Identifiers, RenamedSourceStillParses) {
  const std::vector<std::pair<Language, std::string>> cases = {
      {Language::Cpp, "#include <cstdio>\nint main(){int n=3; long long s=0; for(int i=0;i<n;++i) s+=i; printf(\"%lld\\n\", s);}\n"},
      {Language::Python, "n = int(input())\nprint(sum(i for i in range(n)))\n"},
      {Language::Java, "public class Main { public static void main(String[] a) { int x = 1; System.out.println(x); } }\n"},
      {Language::JavaScript, "let [p, q] = [1, 2];\nconst r = (z) => z + p;\nconsole.log(r(q));\n"},
      {Language::Go, "package main\n\nimport \"fmt\"\n\nfunc main() {\n\tvar n int\n\tfmt.Scan(&n)\n\tfor i := 0; i < n; i++ {\n\t\tfmt.Println(i)\n\t}\n}\n"},
  };
  for (const auto& [lang, src] : cases) {
    auto ids = collect_renameable_identifiers(src, lang);
    EXPECT_FALSE(ids.renameable.empty()) << to_string(lang);
    EXPECT_NO_THROW(parse(rename_all(src, ids, "Zz"), lang)) << to_string(lang);
  }
}

TEST(FunctionNames, Basics) {
  EXPECT_EQ(function_names("int main(){return 0;}", Language::Cpp), (std::set<std::string, std::less<>>{"main"}));
  EXPECT_TRUE(function_names("", Language::Go).empty());
  auto py = function_names("def solve():\n    def helper():\n        return 1\n    return helper()\n", Language::Python);
  EXPECT_EQ(py, (std::set<std::string, std::less<>>{"helper", "solve"}));
}

TEST(FunctionNames, ContainsEveryFunctionNameExclusion) {
  const std::vector<std::pair<Language, std::string>> cases = {
      {Language::Go, "package main\n\ntype P struct{}\n\nfunc (p P) Get() int { return 1 }\n\nfunc main() { println(P{}.Get()) }\n"},
      {Language::JavaScript, "class C { m() { return 1; } }\nconst f = function g() {};\nfunction h() {}\n"},
      {Language::Cpp, "struct S { int get(); };\nint S::get() { return 1; }\nint main() { return S().get(); }\n"},
  };
  for (const auto& [lang, src] : cases) {
    auto fns = function_names(src, lang);
    auto ids = collect_renameable_identifiers(src, lang);
    for (const auto& e : ids.excluded) {
      if (e.reason == ExclusionReason::FunctionName) EXPECT_TRUE(fns.count(e.name)) << e.name;
    }
  }
}

TEST(Insertion, Offsets) {
  EXPECT_EQ(insertion_point("print(1)\n", Language::Python, InsertionKind::Comment), 0u);
  std::string go = "package main\nimport \"fmt\"\nfunc main() { fmt.Println(1) }\n";
  EXPECT_EQ(insertion_point(go, Language::Go, InsertionKind::Comment), 0u);
  EXPECT_EQ(insertion_point(go, Language::Go, InsertionKind::Function), go.find("func"));
  std::string java = "import java.util.*;\npublic class Main {\n  public static void main(String[] a) {}\n}\n";
  EXPECT_EQ(insertion_point(java, Language::Java, InsertionKind::Function), java.find('{') + 1);
  std::string js = "'use strict';\nconsole.log(1);\n";
  EXPECT_EQ(insertion_point(js, Language::JavaScript, InsertionKind::Function), js.find("console"));
  std::string py = "from __future__ import annotations\nx = 1\n";
  EXPECT_EQ(insertion_point(py, Language::Python, InsertionKind::Function), py.find("x ="));
}

TEST(Insertion, GoFunctionBeforePackageDoesNotCompile) {
  if (!testsupport::have("go")) GTEST_SKIP();
  std::string go = "package main\n\nimport \"fmt\"\n\nfunc main() { fmt.Println(1) }\n";
  std::string fn = "func unusedHelper(a int) int { return a }\n";
  auto dir = testsupport::fresh_dir("goins");
  testsupport::write(dir / "bad" / "main.go", fn + go);
  auto at = insertion_point(go, Language::Go, InsertionKind::Function);
  testsupport::write(dir / "good" / "main.go", go.substr(0, at) + fn + go.substr(at));
  EXPECT_NE(testsupport::shell("cd " + (dir / "bad").string() + " && go build -o x main.go 2>&1").first, 0);
  auto [rc, out] = testsupport::shell("cd " + (dir / "good").string() + " && go build -o x main.go 2>&1");
  EXPECT_EQ(rc, 0) << out;
}

TEST(StripComments, Basics) {
  EXPECT_EQ(strip_comments("x = 1  # note", Language::Python), "x = 1");
  EXPECT_EQ(strip_comments("x = 1  # note\n", Language::Python), "x = 1\n");
  std::string plain = "int main() {\n\n  return 0;\n}\n";
  EXPECT_EQ(strip_comments(plain, Language::Cpp), plain);
  EXPECT_EQ(strip_comments("# head\nx = '# not a comment'\n\n# tail\ny = 2\n", Language::Python),
            "x = '# not a comment'\n\ny = 2\n");
  EXPECT_EQ(strip_comments("int/**/x = 1; // c\n", Language::Cpp), "int x = 1;\n");
  EXPECT_EQ(strip_comments("let a = 1 /* x\n y */;\nlet b = 2;\n", Language::JavaScript), "let a = 1\n;\nlet b = 2;\n");
  EXPECT_EQ(strip_comments("const s = \"// no\"; // yes\n", Language::JavaScript), "const s = \"// no\";\n");
}

TEST(StripComments, IdempotentAndReparses) {
  const std::vector<std::pair<Language, std::string>> cases = {
      {Language::Cpp, "/* header\n   block */\n#include <cstdio>\nint main() { // entry\n  int a = 1; /* one */ int b = 2;\n  printf(\"%d // %d\\n\", a, b); // print\n}\n"},
      {Language::Java, "// top\npublic class Main {\n  /** doc */\n  public static void main(String[] x) { System.out.println(1); } // end\n}\n"},
      {Language::Go, "// Package main\npackage main\n\nimport \"fmt\" // fmt\n\nfunc main() {\n\tx := 1 /* a\n\tb */\n\tfmt.Println(x)\n}\n"},
      {Language::Python, "#!/usr/bin/env python3\ndef f():\n    # inside\n    return 1  # one\n\nprint(f())\n"},
  };
  for (const auto& [lang, src] : cases) {
    std::string once = strip_comments(src, lang);
    EXPECT_EQ(strip_comments(once, lang), once);
    SyntaxTree t = parse(once, lang);
    EXPECT_TRUE(comment_ranges(t).empty()) << once;
  }
}

TEST(StripComments, CppBinaryBehaviourUnchanged) {
  if (!testsupport::have("g++")) GTEST_SKIP();
  std::string src =
      "#include <cstdio>\n/* read two numbers\n   and print their sum */\nint main() {\n"
      "  long long a, b; // operands\n  if (scanf(\"%lld %lld\", &a, &b) != 2) return 1; /* guard */\n"
      "  printf(\"%lld /* not a comment */ // nor this\\n\", a/**/+/**/b);\n  return 0;\n}\n";
  std::string stripped = strip_comments(src, Language::Cpp);
  auto dir = testsupport::fresh_dir("stripcpp");
  testsupport::write(dir / "a.cpp", src);
  testsupport::write(dir / "b.cpp", stripped);
  ASSERT_EQ(testsupport::shell("g++ -O0 -o " + (dir / "a").string() + " " + (dir / "a.cpp").string()).first, 0);
  ASSERT_EQ(testsupport::shell("g++ -O0 -o " + (dir / "b").string() + " " + (dir / "b.cpp").string()).first, 0);
  for (std::string input : {"1 2", "-5 7", "1000000000000 1"}) {
    auto ra = testsupport::shell("echo '" + input + "' | " + (dir / "a").string());
    auto rb = testsupport::shell("echo '" + input + "' | " + (dir / "b").string());
    EXPECT_EQ(ra, rb) << input;
  }
}
