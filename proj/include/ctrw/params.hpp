#pragma once

#include <map>
#include <string>
#include <vector>

namespace ctrw {

// String-keyed parameter bag with typed accessors. Values are stored as text
// so that a resolved configuration can be echoed verbatim.
class Params {
 public:
  Params() = default;
  Params(std::initializer_list<std::pair<const std::string, std::string>> init) : values_(init) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set(const std::string& key, double value);

  std::string get(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key, double fallback) const;
  double num(const std::string& key) const;
  long integer(const std::string& key, long fallback) const;
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace ctrw
