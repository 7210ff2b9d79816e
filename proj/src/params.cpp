#include "ctrw/params.hpp"

#include <charconv>
#include <sstream>

#include "ctrw/errors.hpp"

namespace ctrw {

namespace {

double parse_double(const std::string& key, const std::string& text) {
  std::string t = text;
  while (!t.empty() && (t.back() == ' ' || t.back() == '\t')) t.pop_back();
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    raise(ErrorKind::ValidationError, "key '" + key + "' expects a number, got '" + text + "'");
  }
  if (pos != t.size())
    raise(ErrorKind::ValidationError, "key '" + key + "' expects a number, got '" + text + "'");
  return v;
}

}  // namespace

void Params::set(const std::string& key, double value) { values_[key] = format_double(value); }

std::string Params::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Params::num(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(key, it->second);
}

double Params::num(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) raise(ErrorKind::ValidationError, "missing key '" + key + "'");
  return parse_double(key, it->second);
}

long Params::integer(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  double v = parse_double(key, it->second);
  if (v != static_cast<double>(static_cast<long>(v)))
    raise(ErrorKind::ValidationError, "key '" + key + "' expects an integer, got '" + it->second + "'");
  return static_cast<long>(v);
}

std::vector<double> Params::list(const std::string& key, const std::vector<double>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(parse_double(key, item.substr(b)));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace ctrw
