#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ctbn/types.hpp"

namespace ctbn {

// One variable inside a scope: its name, state count, and global declaration
// index. Scopes order variables by declaration index so that every module
// agrees on the joint-state layout.
struct ScopeVar {
  std::string name;
  int n_states = 0;
  int order = 0;

  friend bool operator==(const ScopeVar& a, const ScopeVar& b) {
    return a.name == b.name && a.n_states == b.n_states && a.order == b.order;
  }
};

// An ordered variable scope with mixed-radix joint indexing. The first
// variable varies fastest: index = sum_m digit_m * stride_m, stride_0 = 1.
class Scope {
 public:
  Scope() = default;
  explicit Scope(std::vector<ScopeVar> vars) : vars_(std::move(vars)) {
    std::sort(vars_.begin(), vars_.end(),
              [](const ScopeVar& a, const ScopeVar& b) { return a.order < b.order; });
  }

  const std::vector<ScopeVar>& vars() const { return vars_; }
  int size() const { return static_cast<int>(vars_.size()); }
  bool empty() const { return vars_.empty(); }
  const ScopeVar& operator[](int i) const { return vars_[i]; }

  long n_joint() const {
    long n = 1;
    for (const auto& v : vars_) n *= v.n_states;
    return n;
  }

  long stride(int pos) const {
    long s = 1;
    for (int i = 0; i < pos; ++i) s *= vars_[i].n_states;
    return s;
  }

  int find(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
      if (vars_[i].name == name) return i;
    return -1;
  }

  bool contains(const std::string& name) const { return find(name) >= 0; }

  bool is_subset_of(const Scope& other) const {
    for (const auto& v : vars_)
      if (other.find(v.name) < 0) return false;
    return true;
  }

  // Digit of `joint_index` for the variable at position `pos`.
  int digit(long joint_index, int pos) const {
    return static_cast<int>((joint_index / stride(pos)) % vars_[pos].n_states);
  }

  long index_of(const std::vector<int>& digits) const {
    long idx = 0, s = 1;
    for (int i = 0; i < size(); ++i) {
      idx += digits[i] * s;
      s *= vars_[i].n_states;
    }
    return idx;
  }

  std::vector<int> digits_of(long joint_index) const {
    std::vector<int> d(size());
    for (int i = 0; i < size(); ++i) {
      d[i] = static_cast<int>(joint_index % vars_[i].n_states);
      joint_index /= vars_[i].n_states;
    }
    return d;
  }

  // Positions of `sub`'s variables inside this scope (sub must be a subset).
  std::vector<int> positions_of(const Scope& sub) const {
    std::vector<int> pos(sub.size());
    for (int i = 0; i < sub.size(); ++i) {
      pos[i] = find(sub[i].name);
      if (pos[i] < 0)
        throw ValidationError("scope does not contain variable '" + sub[i].name + "'");
    }
    return pos;
  }

  // Project a joint index of this scope onto the sub-scope at `positions`.
  long project(long joint_index, const std::vector<int>& positions,
               const Scope& sub) const {
    std::vector<int> d(positions.size());
    for (size_t i = 0; i < positions.size(); ++i) d[i] = digit(joint_index, positions[i]);
    return sub.index_of(d);
  }

  // Index over the complement of `positions`, used to compare "all other
  // variables agree" when embedding.
  long complement_key(long joint_index, const std::vector<int>& positions) const {
    long key = 0, s = 1;
    for (int i = 0; i < size(); ++i) {
      if (std::find(positions.begin(), positions.end(), i) != positions.end()) continue;
      key += digit(joint_index, i) * s;
      s *= vars_[i].n_states;
    }
    return key;
  }

  static Scope merge(const Scope& a, const Scope& b) {
    std::vector<ScopeVar> vars = a.vars_;
    for (const auto& v : b.vars_) {
      int pos = a.find(v.name);
      if (pos < 0) {
        vars.push_back(v);
      } else if (!(a[pos] == v)) {
        throw ValidationError("conflicting definitions of variable '" + v.name + "'");
      }
    }
    return Scope(std::move(vars));
  }

  friend bool operator==(const Scope& a, const Scope& b) { return a.vars_ == b.vars_; }

  std::string to_string() const {
    std::string s = "(";
    for (int i = 0; i < size(); ++i) {
      if (i) s += ",";
      s += vars_[i].name;
    }
    return s + ")";
  }

 private:
  std::vector<ScopeVar> vars_;
};

}  // namespace ctbn
