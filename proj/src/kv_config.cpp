#include "rcnet/kv_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "rcnet/errors.hpp"

namespace rcnet {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T> T parse_number(const std::string &key, const std::string &v) {
  T out{};
  const std::string t = trim(v);
  const auto *end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end)
    throw ConfigError("key '" + key + "': cannot parse '" + v + "'");
  return out;
}

std::vector<std::string> split_commas(const std::string &text) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(text);
  while (std::getline(is, cur, ','))
    if (!trim(cur).empty())
      parts.push_back(trim(cur));
  return parts;
}

} // namespace

std::vector<std::size_t> parse_size_list(const std::string &text) {
  std::vector<std::size_t> out;
  for (const auto &p : split_commas(text))
    out.push_back(parse_number<std::size_t>("list", p));
  return out;
}

std::vector<double> parse_real_list(const std::string &text) {
  std::vector<double> out;
  for (const auto &p : split_commas(text))
    out.push_back(parse_number<double>("list", p));
  return out;
}

std::string join_sizes(const std::vector<std::size_t> &v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k)
    s += (k ? "," : "") + std::to_string(v[k]);
  return s;
}

void KvSection::set(const std::string &key, std::string value) {
  for (auto &e : entries_)
    if (e.first == key) {
      e.second = std::move(value);
      return;
    }
  entries_.emplace_back(key, std::move(value));
}

bool KvSection::has(const std::string &key) const { return get(key).has_value(); }

std::optional<std::string> KvSection::get(const std::string &key) const {
  for (const auto &e : entries_)
    if (e.first == key)
      return e.second;
  return std::nullopt;
}

std::string KvSection::str(const std::string &key,
                           const std::string &fallback) const {
  return get(key).value_or(fallback);
}

double KvSection::real(const std::string &key, double fallback) const {
  auto v = get(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

std::int64_t KvSection::integer(const std::string &key,
                                std::int64_t fallback) const {
  auto v = get(key);
  return v ? parse_number<std::int64_t>(key, *v) : fallback;
}

std::uint64_t KvSection::u64(const std::string &key,
                             std::uint64_t fallback) const {
  auto v = get(key);
  return v ? parse_number<std::uint64_t>(key, *v) : fallback;
}

bool KvSection::flag(const std::string &key, bool fallback) const {
  auto v = get(key);
  if (!v)
    return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on")
    return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off")
    return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<std::size_t>
KvSection::sizes(const std::string &key,
                 const std::vector<std::size_t> &fallback) const {
  auto v = get(key);
  return v ? parse_size_list(*v) : fallback;
}

std::vector<double> KvSection::reals(const std::string &key,
                                     const std::vector<double> &fallback) const {
  auto v = get(key);
  return v ? parse_real_list(*v) : fallback;
}

KvConfig KvConfig::parse(const std::string &text) {
  KvConfig cfg;
  std::string current;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) +
                          ": unterminated section header");
      current = trim(line.substr(1, line.size() - 2));
      cfg.sections_[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    cfg.sections_[current].set(key, trim(line.substr(eq + 1)));
  }
  return cfg;
}

KvConfig KvConfig::load(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const KvSection &KvConfig::section(const std::string &name) const {
  static const KvSection empty;
  auto it = sections_.find(name);
  return it == sections_.end() ? empty : it->second;
}

} // namespace rcnet
