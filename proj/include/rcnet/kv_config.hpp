#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rcnet {

/// Ordered key=value pairs of one config section.
class KvSection {
public:
  void set(const std::string &key, std::string value);
  bool has(const std::string &key) const;
  std::optional<std::string> get(const std::string &key) const;

  std::string str(const std::string &key, const std::string &fallback) const;
  double real(const std::string &key, double fallback) const;
  std::int64_t integer(const std::string &key, std::int64_t fallback) const;
  std::uint64_t u64(const std::string &key, std::uint64_t fallback) const;
  bool flag(const std::string &key, bool fallback) const;
  std::vector<std::size_t> sizes(const std::string &key,
                                 const std::vector<std::size_t> &fallback) const;
  std::vector<double> reals(const std::string &key,
                            const std::vector<double> &fallback) const;

  const std::vector<std::pair<std::string, std::string>> &entries() const {
    return entries_;
  }

private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// UTF-8 text of `[section]` headers and `key = value` lines; `#` starts a
/// comment. Keys before the first header land in section "".
class KvConfig {
public:
  static KvConfig parse(const std::string &text);
  static KvConfig load(const std::string &path);

  const KvSection &section(const std::string &name) const;
  KvSection &section_mut(const std::string &name) { return sections_[name]; }
  bool has_section(const std::string &name) const {
    return sections_.count(name) != 0;
  }

private:
  std::map<std::string, KvSection> sections_;
};

std::vector<std::size_t> parse_size_list(const std::string &text);
std::vector<double> parse_real_list(const std::string &text);
std::string join_sizes(const std::vector<std::size_t> &v);

} // namespace rcnet
