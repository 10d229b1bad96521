#include "fmhasim/int_tuple.hpp"

#include <cctype>
#include <sstream>

namespace fmhasim {

int64_t size(const IntTuple& t) {
  if (t.is_leaf()) return t.value();
  int64_t p = 1;
  for (const auto& c : t.children()) p *= size(c);
  return p;
}

static void flatten_into(const IntTuple& t, std::vector<int64_t>& out) {
  if (t.is_leaf()) {
    out.push_back(t.value());
    return;
  }
  for (const auto& c : t.children()) flatten_into(c, out);
}

std::vector<int64_t> flatten(const IntTuple& t) {
  std::vector<int64_t> out;
  flatten_into(t, out);
  return out;
}

bool congruent(const IntTuple& a, const IntTuple& b) {
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return true;
  if (a.rank() != b.rank()) return false;
  for (size_t i = 0; i < a.rank(); ++i)
    if (!congruent(a[i], b[i])) return false;
  return true;
}

std::vector<int64_t> colex_decompose(int64_t i,
                                     const std::vector<int64_t>& radices) {
  if (i < 0) throw std::invalid_argument("colex_decompose: negative index");
  std::vector<int64_t> digits(radices.size(), 0);
  for (size_t k = 0; k < radices.size(); ++k) {
    if (k + 1 == radices.size()) {
      digits[k] = i;  // last mode extends
    } else {
      if (radices[k] <= 0)
        throw std::invalid_argument("colex_decompose: zero radix");
      digits[k] = i % radices[k];
      i /= radices[k];
    }
  }
  return digits;
}

static IntTuple unflatten_impl(const std::vector<int64_t>& leaves, size_t& pos,
                               const IntTuple& pattern) {
  if (pattern.is_leaf()) {
    if (pos >= leaves.size())
      throw std::invalid_argument("unflatten: too few leaves");
    return IntTuple(leaves[pos++]);
  }
  std::vector<IntTuple> out;
  out.reserve(pattern.rank());
  for (const auto& c : pattern.children())
    out.push_back(unflatten_impl(leaves, pos, c));
  return IntTuple(std::move(out));
}

IntTuple unflatten(const std::vector<int64_t>& leaves,
                   const IntTuple& pattern) {
  size_t pos = 0;
  IntTuple r = unflatten_impl(leaves, pos, pattern);
  if (pos != leaves.size())
    throw std::invalid_argument("unflatten: leaf count mismatch");
  return r;
}

namespace {

struct Parser {
  const std::string& s;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
  void expect(char c) {
    if (peek() != c)
      throw std::invalid_argument("IntTuple parse error: expected '" +
                                  std::string(1, c) + "' in \"" + s + "\"");
    ++pos;
  }

  IntTuple parse() {
    if (peek() == '(') {
      ++pos;
      std::vector<IntTuple> children;
      if (peek() != ')') {
        children.push_back(parse());
        while (peek() == ',') {
          ++pos;
          children.push_back(parse());
        }
      }
      expect(')');
      return IntTuple(std::move(children));
    }
    return IntTuple(parse_int());
  }

  int64_t parse_int() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
      ++pos;
    if (pos == start)
      throw std::invalid_argument("IntTuple parse error: expected integer in \"" +
                                  s + "\"");
    return std::stoll(s.substr(start, pos - start));
  }
};

}  // namespace

IntTuple parse_int_tuple(const std::string& s) {
  Parser p{s};
  IntTuple t = p.parse();
  p.skip_ws();
  if (p.pos != s.size())
    throw std::invalid_argument("IntTuple parse error: trailing characters in \"" +
                                s + "\"");
  return t;
}

std::string to_string(const IntTuple& t) {
  if (t.is_leaf()) return std::to_string(t.value());
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < t.rank(); ++i) {
    if (i) os << ',';
    os << to_string(t[i]);
  }
  os << ')';
  return os.str();
}

}  // namespace fmhasim
