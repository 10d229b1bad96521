#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fmhasim {

// A non-negative integer or an arbitrarily nested tuple of such.
// Used for layout shapes, strides, and multidimensional coordinates.
class IntTuple {
public:
  IntTuple() : leaf_(true), value_(0) {}
  IntTuple(int64_t v) : leaf_(true), value_(v) {
    if (v < 0) throw std::invalid_argument("IntTuple leaf must be >= 0");
  }
  IntTuple(std::initializer_list<IntTuple> children)
      : leaf_(false), children_(children) {}
  explicit IntTuple(std::vector<IntTuple> children)
      : leaf_(false), children_(std::move(children)) {}

  bool is_leaf() const { return leaf_; }
  int64_t value() const {
    if (!leaf_) throw std::logic_error("IntTuple: value() on non-leaf");
    return value_;
  }
  size_t rank() const { return leaf_ ? 1 : children_.size(); }
  const IntTuple& operator[](size_t i) const {
    if (leaf_) {
      if (i != 0) throw std::out_of_range("IntTuple: leaf mode index");
      return *this;
    }
    return children_.at(i);
  }
  const std::vector<IntTuple>& children() const {
    if (leaf_) throw std::logic_error("IntTuple: children() on leaf");
    return children_;
  }

  bool operator==(const IntTuple& o) const {
    if (leaf_ != o.leaf_) return false;
    if (leaf_) return value_ == o.value_;
    return children_ == o.children_;
  }
  bool operator!=(const IntTuple& o) const { return !(*this == o); }

private:
  bool leaf_;
  int64_t value_ = 0;
  std::vector<IntTuple> children_;
};

// Product of all leaves.
int64_t size(const IntTuple& t);

// Leaves in left-to-right order.
std::vector<int64_t> flatten(const IntTuple& t);

// Same nesting structure and extent at every level.
bool congruent(const IntTuple& a, const IntTuple& b);

// Mixed-radix colexicographic decomposition of i by the flattened shape.
// The last radix is unbounded (canonical domain extension), so any i >= 0
// decomposes.
std::vector<int64_t> colex_decompose(int64_t i,
                                     const std::vector<int64_t>& radices);

// Rebuild a flat digit list into tuple congruent with `pattern`.
IntTuple unflatten(const std::vector<int64_t>& leaves, const IntTuple& pattern);

// "(a,b,(c,d))" or bare "n". Whitespace-insensitive.
IntTuple parse_int_tuple(const std::string& s);
std::string to_string(const IntTuple& t);

}  // namespace fmhasim
