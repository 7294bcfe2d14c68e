#pragma once

#include <cstddef>
#include <vector>

namespace mcfipm {

/// Arcs held at one of their bounds. At most one bound per arc is active;
/// fixed arcs (lower == upper) are removed before the solver runs.
class ActiveSet {
public:
  ActiveSet() = default;
  explicit ActiveSet(std::size_t arcs) : lower_(arcs, 0), upper_(arcs, 0) {}

  std::size_t size() const noexcept { return lower_.size(); }
  // An empty set (size 0) reports every arc as free.
  bool lower(std::size_t j) const { return j < lower_.size() && lower_[j] != 0; }
  bool upper(std::size_t j) const { return j < upper_.size() && upper_[j] != 0; }
  bool is_free(std::size_t j) const { return !lower(j) && !upper(j); }

  void set_lower(std::size_t j, bool on) {
    if (on) upper_[j] = 0;
    lower_[j] = on ? 1 : 0;
  }
  void set_upper(std::size_t j, bool on) {
    if (on) lower_[j] = 0;
    upper_[j] = on ? 1 : 0;
  }

  std::size_t lower_count() const { return count(lower_); }
  std::size_t upper_count() const { return count(upper_); }
  std::size_t active_count() const { return lower_count() + upper_count(); }

  friend bool operator==(const ActiveSet&, const ActiveSet&) = default;

private:
  static std::size_t count(const std::vector<char>& v) {
    std::size_t c = 0;
    for (char f : v) c += f != 0;
    return c;
  }

  std::vector<char> lower_;
  std::vector<char> upper_;
};

}  // namespace mcfipm
