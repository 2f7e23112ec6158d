#ifndef BIASFORGE_SYNTAX_PROFILE_HPP
#define BIASFORGE_SYNTAX_PROFILE_HPP

#include <set>
#include <string>
#include <string_view>

#include "biasforge/language.hpp"

namespace biasforge::syntax {

/// How a language constrains insertion at the top of a file.
enum class EntryStyle {
  FreeTop,          // anything may be placed at byte 0 (Python, JavaScript, C++)
  PackageThenDecls, // Go: package clause and imports precede declarations
  ClassBody,        // Java: functions live inside a class body
};

struct LanguageProfile {
  Language language;
  std::string line_comment_token;
  std::string identifier_charset;
  std::set<std::string, std::less<>> reserved_words;
  /// Predeclared / standard-library names a generated identifier must never
  /// shadow. For C++ this includes common std:: names because competitive
  /// code pulls them into the global namespace with `using namespace std`.
  std::set<std::string, std::less<>> builtins;
  EntryStyle entry_style;

  [[nodiscard]] bool is_reserved(std::string_view name) const { return reserved_words.count(name) > 0; }
  [[nodiscard]] bool is_builtin(std::string_view name) const { return builtins.count(name) > 0; }
};

namespace detail {

inline LanguageProfile make_cpp() {
  return {
      Language::Cpp,
      "//",
      "[A-Za-z_][A-Za-z0-9_]*",
      {"alignas", "alignof", "and", "and_eq", "asm", "auto", "bitand", "bitor", "bool", "break",
       "case", "catch", "char", "char8_t", "char16_t", "char32_t", "class", "compl", "concept",
       "const", "consteval", "constexpr", "constinit", "const_cast", "continue", "co_await",
       "co_return", "co_yield", "decltype", "default", "delete", "do", "double", "dynamic_cast",
       "else", "enum", "explicit", "export", "extern", "false", "final", "float", "for", "friend",
       "goto", "if", "import", "inline", "int", "long", "module", "mutable", "namespace", "new",
       "noexcept", "not", "not_eq", "nullptr", "operator", "or", "or_eq", "override", "private",
       "protected", "public", "register", "reinterpret_cast", "requires", "return", "short",
       "signed", "sizeof", "static", "static_assert", "static_cast", "struct", "switch",
       "template", "this", "thread_local", "throw", "true", "try", "typedef", "typeid",
       "typename", "union", "unsigned", "using", "virtual", "void", "volatile", "wchar_t",
       "while", "xor", "xor_eq", "_"},
      {// streams and I/O
       "cin", "cout", "cerr", "clog", "endl", "ends", "flush", "printf", "scanf", "puts", "gets",
       "getchar", "putchar", "fgets", "fputs", "fprintf", "fscanf", "sprintf", "sscanf", "snprintf",
       "fopen", "fclose", "fread", "fwrite", "stdin", "stdout", "stderr", "getline", "ws", "EOF",
       "FILE", "ios", "ios_base", "fixed", "setprecision", "setw", "setfill", "hex", "dec", "oct",
       "boolalpha", "noskipws", "istream", "ostream", "iostream", "stringstream", "istringstream",
       "ostringstream", "ifstream", "ofstream", "fstream", "cstdio",
       // containers and utilities
       "std", "vector", "string", "map", "set", "multiset", "multimap", "unordered_map",
       "unordered_set", "queue", "deque", "stack", "priority_queue", "list", "forward_list",
       "array", "pair", "tuple", "bitset", "optional", "variant", "any", "span", "string_view",
       "function", "hash", "less", "greater", "equal_to", "plus", "minus", "multiplies",
       "divides", "modulus", "negate", "allocator", "iterator", "size_t", "ptrdiff_t",
       "nullptr_t", "int8_t", "int16_t", "int32_t", "int64_t", "uint8_t", "uint16_t", "uint32_t",
       "uint64_t", "intmax_t", "uintmax_t", "make_pair", "make_tuple", "tie", "get", "swap",
       "move", "forward", "exchange", "ref", "cref", "begin", "end", "rbegin", "rend", "cbegin",
       "cend", "size", "ssize", "empty", "data", "next", "prev", "advance", "distance",
       "back_inserter", "inserter", "numeric_limits", "initializer_list", "complex", "valarray",
       "ratio", "chrono", "clock", "time", "rand", "srand", "random_device", "mt19937",
       "mt19937_64", "uniform_int_distribution", "uniform_real_distribution", "shuffle",
       "random_shuffle", "exit", "abort", "atexit", "system", "malloc", "calloc", "realloc",
       "free", "memset", "memcpy", "memmove", "memcmp", "strlen", "strcmp", "strncmp", "strcpy",
       "strncpy", "strcat", "strchr", "strstr", "strtok", "atoi", "atol", "atoll", "atof",
       "stoi", "stol", "stoll", "stoul", "stoull", "stof", "stod", "stold", "to_string",
       "isalpha", "isdigit", "isalnum", "isspace", "isupper", "islower", "toupper", "tolower",
       "ispunct", "isprint",
       // algorithms
       "sort", "stable_sort", "partial_sort", "nth_element", "reverse", "rotate", "unique",
       "lower_bound", "upper_bound", "equal_range", "binary_search", "find", "find_if",
       "find_if_not", "count", "count_if", "accumulate", "partial_sum", "iota", "reduce",
       "transform", "for_each", "fill", "fill_n", "copy", "copy_if", "copy_n", "remove",
       "remove_if", "replace", "replace_if", "max", "min", "minmax", "max_element",
       "min_element", "minmax_element", "clamp", "next_permutation", "prev_permutation",
       "is_sorted", "merge", "inplace_merge", "includes", "set_union", "set_intersection",
       "set_difference", "set_symmetric_difference", "make_heap", "push_heap", "pop_heap",
       "sort_heap", "all_of", "any_of", "none_of", "equal", "mismatch", "search", "adjacent_find",
       "lexicographical_compare", "partition", "stable_partition", "gcd", "lcm", "inner_product",
       "adjacent_difference", "generate", "midpoint", "popcount", "countl_zero", "countr_zero",
       "bit_width", "has_single_bit",
       // <cmath>
       "abs", "labs", "llabs", "fabs", "sqrt", "cbrt", "pow", "exp", "exp2", "log", "log2",
       "log10", "sin", "cos", "tan", "asin", "acos", "atan", "atan2", "sinh", "cosh", "tanh",
       "floor", "ceil", "round", "trunc", "fmod", "hypot", "fmax", "fmin", "isnan", "isinf",
       "erf", "gamma", "lgamma", "tgamma", "j0", "j1", "jn", "y0", "y1", "yn", "div", "ldiv",
       "lldiv", "signbit", "copysign", "nan", "modf", "frexp", "ldexp", "remainder", "rint",
       "lround", "llround", "M_PI",
       // limits and misc macros commonly referenced
       "INT_MAX", "INT_MIN", "LLONG_MAX", "LLONG_MIN", "UINT_MAX", "ULLONG_MAX", "LONG_MAX",
       "LONG_MIN", "SHRT_MAX", "CHAR_MAX", "DBL_MAX", "DBL_MIN", "FLT_MAX", "NULL", "assert",
       "errno", "main",
       // short macros from the C library headers and the GNU dialect
       "EADV", "EDOM", "EIO", "NAN", "NSIG", "SNAN", "WEOF", "unix", "linux", "i386"},
      EntryStyle::FreeTop,
  };
}

inline LanguageProfile make_python() {
  return {
      Language::Python,
      "#",
      "[A-Za-z_][A-Za-z0-9_]* (ASCII subset)",
      {"False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
       "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
       "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
       "try", "while", "with", "yield", "match", "case", "type", "_"},
      {"abs", "aiter", "all", "anext", "any", "ascii", "bin", "bool", "breakpoint", "bytearray",
       "bytes", "callable", "chr", "classmethod", "compile", "complex", "copyright", "credits",
       "delattr", "dict", "dir", "divmod", "enumerate", "eval", "exec", "exit", "filter", "float",
       "format", "frozenset", "getattr", "globals", "hasattr", "hash", "help", "hex", "id",
       "input", "int", "isinstance", "issubclass", "iter", "len", "license", "list", "locals",
       "map", "max", "memoryview", "min", "next", "object", "oct", "open", "ord", "pow", "print",
       "property", "quit", "range", "repr", "reversed", "round", "set", "setattr", "slice",
       "sorted", "staticmethod", "str", "sum", "super", "tuple", "type", "vars", "zip",
       "__import__", "__name__", "__file__", "__doc__", "__builtins__", "__spec__",
       "__loader__", "__package__", "__debug__", "NotImplemented", "Ellipsis",
       "BaseException", "Exception", "ArithmeticError", "AssertionError", "AttributeError",
       "EOFError", "IndexError", "KeyError", "KeyboardInterrupt", "LookupError", "MemoryError",
       "NameError", "NotImplementedError", "OSError", "OverflowError", "RecursionError",
       "RuntimeError", "StopIteration", "SyntaxError", "SystemExit", "TypeError", "ValueError",
       "ZeroDivisionError", "IOError"},
      EntryStyle::FreeTop,
  };
}

inline LanguageProfile make_java() {
  return {
      Language::Java,
      "//",
      "[A-Za-z_$][A-Za-z0-9_$]*",
      {"abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class",
       "const", "continue", "default", "do", "double", "else", "enum", "extends", "final",
       "finally", "float", "for", "goto", "if", "implements", "import", "instanceof", "int",
       "interface", "long", "native", "new", "package", "private", "protected", "public",
       "return", "short", "static", "strictfp", "super", "switch", "synchronized", "this",
       "throw", "throws", "transient", "try", "void", "volatile", "while", "true", "false",
       "null", "var", "yield", "record", "sealed", "permits", "non", "_"},
      {"String", "System", "Math", "StrictMath", "Integer", "Long", "Short", "Byte", "Double",
       "Float", "Boolean", "Character", "Object", "Number", "StringBuilder", "StringBuffer",
       "Thread", "Runnable", "Exception", "RuntimeException", "Error", "Throwable",
       "IllegalArgumentException", "IllegalStateException", "ArithmeticException",
       "ArrayIndexOutOfBoundsException", "IndexOutOfBoundsException", "NullPointerException",
       "NumberFormatException", "ClassCastException", "UnsupportedOperationException",
       "Iterable", "Comparable", "CharSequence", "Class", "Void", "Enum", "Record", "Override",
       "Deprecated", "SuppressWarnings", "FunctionalInterface", "Cloneable", "AutoCloseable",
       "Process", "Runtime", "ClassLoader", "main", "length"},
      EntryStyle::ClassBody,
  };
}

inline LanguageProfile make_javascript() {
  return {
      Language::JavaScript,
      "//",
      "[A-Za-z_$][A-Za-z0-9_$]*",
      {"await", "break", "case", "catch", "class", "const", "continue", "debugger", "default",
       "delete", "do", "else", "enum", "export", "extends", "false", "finally", "for",
       "function", "if", "implements", "import", "in", "instanceof", "interface", "let", "new",
       "null", "package", "private", "protected", "public", "return", "static", "super",
       "switch", "this", "throw", "true", "try", "typeof", "var", "void", "while", "with",
       "yield", "async", "of", "get", "set", "arguments", "eval", "_"},
      {"undefined", "NaN", "Infinity", "globalThis", "Object", "Function", "Array", "Number",
       "parseFloat", "parseInt", "isFinite", "isNaN", "Boolean", "String", "Symbol", "Date",
       "Promise", "RegExp", "Error", "TypeError", "RangeError", "SyntaxError", "ReferenceError",
       "EvalError", "URIError", "JSON", "Math", "Intl", "ArrayBuffer", "Uint8Array", "Int8Array",
       "Uint16Array", "Int16Array", "Uint32Array", "Int32Array", "Float32Array",
       "Float64Array", "BigInt", "BigInt64Array", "BigUint64Array", "DataView", "Map", "Set",
       "WeakMap", "WeakSet", "Proxy", "Reflect", "require", "module", "exports", "process",
       "console", "Buffer", "setTimeout", "setInterval", "setImmediate", "clearTimeout",
       "clearInterval", "queueMicrotask", "structuredClone", "__dirname", "__filename",
       "global", "encodeURIComponent", "decodeURIComponent", "encodeURI", "decodeURI",
       "escape", "unescape", "TextEncoder", "TextDecoder", "URL", "atob", "btoa", "main"},
      EntryStyle::FreeTop,
  };
}

inline LanguageProfile make_go() {
  return {
      Language::Go,
      "//",
      "[A-Za-z_][A-Za-z0-9_]* (ASCII subset)",
      {"break", "case", "chan", "const", "continue", "default", "defer", "else", "fallthrough",
       "for", "func", "go", "goto", "if", "import", "interface", "map", "package", "range",
       "return", "select", "struct", "switch", "type", "var", "_"},
      {"append", "cap", "clear", "close", "complex", "copy", "delete", "imag", "len", "make",
       "max", "min", "new", "panic", "print", "println", "real", "recover", "bool", "byte",
       "comparable", "complex64", "complex128", "error", "float32", "float64", "int", "int8",
       "int16", "int32", "int64", "rune", "string", "uint", "uint8", "uint16", "uint32",
       "uint64", "uintptr", "any", "true", "false", "iota", "nil", "main", "init", "fmt", "os",
       "bufio", "strconv", "strings", "sort", "math", "bytes", "errors", "io", "time", "unicode",
       "slices", "maps", "container", "heap", "list", "big", "bits", "rand"},
      EntryStyle::PackageThenDecls,
  };
}

}  // namespace detail

inline const LanguageProfile& profile(Language lang) {
  static const LanguageProfile profiles[] = {
      detail::make_cpp(), detail::make_python(), detail::make_java(), detail::make_javascript(),
      detail::make_go()};
  return profiles[static_cast<int>(lang)];
}

}  // namespace biasforge::syntax

#endif  // BIASFORGE_SYNTAX_PROFILE_HPP
