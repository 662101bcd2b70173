#include "cfpn/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "cfpn/epoch_file.hpp"

namespace cfpn {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

using Setter = std::function<bool(RunConfig&, const std::string&)>;

Setter size_field(std::size_t RunConfig::*field) {
  return [field](RunConfig& c, const std::string& v) { return parse_number(v, c.*field); };
}

Setter double_field(double RunConfig::*field) {
  return [field](RunConfig& c, const std::string& v) { return parse_number(v, c.*field); };
}

Setter bool_field(bool RunConfig::*field) {
  return [field](RunConfig& c, const std::string& v) {
    if (v == "true" || v == "1") c.*field = true;
    else if (v == "false" || v == "0") c.*field = false;
    else return false;
    return true;
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"e1", size_field(&RunConfig::e1)},
      {"e2", size_field(&RunConfig::e2)},
      {"z", size_field(&RunConfig::z)},
      {"ae_output",
       [](RunConfig& c, const std::string& v) {
         if (v != "relu" && v != "linear") return false;
         c.ae_output = parse_output_activation(v);
         return true;
       }},
      {"nsdru_channels", size_field(&RunConfig::nsdru_channels)},
      {"branches", size_field(&RunConfig::branches)},
      {"hidden", size_field(&RunConfig::hidden)},
      {"f_low", [](RunConfig& c, const std::string& v) { return parse_number(v, c.filter.f_low); }},
      {"f_high", [](RunConfig& c, const std::string& v) { return parse_number(v, c.filter.f_high); }},
      {"filter_order", [](RunConfig& c, const std::string& v) { return parse_number(v, c.filter.order); }},
      {"lambda_recon", double_field(&RunConfig::lambda_recon)},
      {"learning_rate", double_field(&RunConfig::learning_rate)},
      {"beta1", double_field(&RunConfig::beta1)},
      {"beta2", double_field(&RunConfig::beta2)},
      {"adam_epsilon", double_field(&RunConfig::adam_epsilon)},
      {"batch_size", size_field(&RunConfig::batch_size)},
      {"max_epochs", size_field(&RunConfig::max_epochs)},
      {"split_fraction", double_field(&RunConfig::split_fraction)},
      {"seed", [](RunConfig& c, const std::string& v) { return parse_number(v, c.seed); }},
      {"deterministic_mode", bool_field(&RunConfig::deterministic_mode)},
      {"stop_at_perfect_validation", bool_field(&RunConfig::stop_at_perfect_validation)},
  };
  return table;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end())
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (value.empty() || !it->second(cfg, value))
      throw ParseError("config line " + std::to_string(lineno) + ": invalid value '" + value + "' for " + key);
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) { return parse_config_text(read_file(path)); }

std::string format_config(const RunConfig& c) {
  std::ostringstream os;
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "e1 = " << c.e1 << '\n'
     << "e2 = " << c.e2 << '\n'
     << "z = " << c.z << '\n'
     << "ae_output = " << to_string(c.ae_output) << '\n'
     << "nsdru_channels = " << c.nsdru_channels << '\n'
     << "branches = " << c.branches << '\n'
     << "hidden = " << c.hidden << '\n'
     << "f_low = " << num(c.filter.f_low) << '\n'
     << "f_high = " << num(c.filter.f_high) << '\n'
     << "filter_order = " << c.filter.order << '\n'
     << "lambda_recon = " << num(c.lambda_recon) << '\n'
     << "learning_rate = " << num(c.learning_rate) << '\n'
     << "beta1 = " << num(c.beta1) << '\n'
     << "beta2 = " << num(c.beta2) << '\n'
     << "adam_epsilon = " << num(c.adam_epsilon) << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "max_epochs = " << c.max_epochs << '\n'
     << "split_fraction = " << num(c.split_fraction) << '\n'
     << "seed = " << c.seed << '\n'
     << "deterministic_mode = " << (c.deterministic_mode ? "true" : "false") << '\n'
     << "stop_at_perfect_validation = " << (c.stop_at_perfect_validation ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace cfpn
