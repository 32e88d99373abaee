#include "masuq/config.hpp"

#include <charconv>
#include <fstream>

#include "masuq/error.hpp"

namespace masuq {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw Error(Errc::ConfigError, std::string(key) + ": '" + std::string(v) + "' is not a number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(Errc::ConfigError, std::string(key) + ": expected true/false");
}

}  // namespace

void CliConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(Errc::ConfigError, m); };
  if (endpoint.empty() == mock_script.empty()) fail("exactly one of endpoint / mock_script must be set");
  if (rounds < 1 || rounds > 5) fail("rounds must be in [1, 5]");
  if (parallelism < 1) fail("parallelism must be >= 1");
  if (max_in_flight < 1) fail("max_in_flight must be >= 1");
  if (bins < 1) fail("bins must be >= 1");
  if (folds < 2) fail("folds must be >= 2");
  if (sampling.max_tokens < 1) fail("max_tokens must be >= 1");
  if (sampling.logprob_k < 0) fail("logprob_k must be >= 0");
  if (!(sampling.temperature >= 0 && sampling.temperature <= 2)) fail("temperature must be in [0, 2]");
  if (!(sampling.top_p > 0 && sampling.top_p <= 1)) fail("top_p must be in (0, 1]");
  if (dataset.empty()) fail("dataset is required");
}

void apply_config_value(CliConfig& c, std::string_view key, std::string_view raw) {
  const std::string v = trim(raw);
  if (key == "endpoint") c.endpoint = v;
  else if (key == "model") c.model = v;
  else if (key == "api_key_env") c.api_key_env = v;
  else if (key == "timeout_seconds") c.timeout_seconds = parse_number<int>(key, v);
  else if (key == "max_in_flight") c.max_in_flight = parse_number<int>(key, v);
  else if (key == "mock_script") c.mock_script = v;
  else if (key == "temperature") c.sampling.temperature = parse_number<double>(key, v);
  else if (key == "top_p") c.sampling.top_p = parse_number<double>(key, v);
  else if (key == "max_tokens") c.sampling.max_tokens = parse_number<int>(key, v);
  else if (key == "logprob_k") c.sampling.logprob_k = parse_number<int>(key, v);
  else if (key == "architecture" || key == "arch") {
    try {
      c.architecture = parse_architecture(v);
    } catch (const Error& e) {
      throw Error(Errc::ConfigError, e.what());
    }
  } else if (key == "rounds") c.rounds = parse_number<int>(key, v);
  else if (key == "arch_spec") c.arch_spec = v;
  else if (key == "dataset") c.dataset = v;
  else if (key == "out_dir" || key == "out") c.out_dir = v;
  else if (key == "parallelism") c.parallelism = parse_number<int>(key, v);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "group") c.group = parse_feature_group(v);
  else if (key == "bins") c.bins = parse_number<int>(key, v);
  else if (key == "folds") c.folds = parse_number<int>(key, v);
  else if (key == "virtual_start_ms") c.virtual_start_ms = parse_number<std::int64_t>(key, v);
  else if (key == "parallel_workers") c.parallel_workers = parse_bool(key, v);
  else throw Error(Errc::ConfigError, "unknown config key '" + std::string(key) + "'");
}

void load_config_file(CliConfig& c, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open config file " + path.string());
  const auto dir = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::ConfigError, path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if ((key == "mock_script" || key == "dataset" || key == "arch_spec") && !value.empty() &&
        std::filesystem::path(value).is_relative()) {
      value = (dir / value).lexically_normal().string();
    }
    try {
      apply_config_value(c, key, value);
    } catch (const Error& e) {
      throw Error(Errc::ConfigError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace masuq
