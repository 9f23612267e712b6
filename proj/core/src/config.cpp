#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "selftrack/pipeline.hpp"

namespace selftrack {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw std::invalid_argument("config key '" + key + "': expected true or false, got '" + text + "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, sep)) {
    part = trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
  std::vector<int> out;
  if (text == "none") return out;
  for (const auto& part : split(text, ',')) out.push_back(parse_number<int>(part, key));
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

PipelineConfig read_config(std::istream& in) {
  PipelineConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "max_frame_gap") {
        c.max_frame_gap = parse_number<int>(value, key);
      } else if (key == "lifted_gaps") {
        c.lifted_gaps = parse_int_list(value, key);
      } else if (key == "lifted_tracklet_labels") {
        c.lifted_tracklet_labels = parse_bool(value, key);
      } else if (key == "lifted_quantile") {
        c.lifted_quantile = parse_number<double>(value, key);
      } else if (key == "pregroup_threshold") {
        c.pregroup.threshold = parse_number<double>(value, key);
      } else if (key == "pregroup_max_gap") {
        c.pregroup.max_frame_gap = parse_number<int>(value, key);
      } else if (key == "min_cluster_size") {
        c.min_cluster_size = parse_number<int>(value, key);
      } else if (key == "t_low") {
        c.affinity.t_low = parse_number<double>(value, key);
      } else if (key == "t_high") {
        c.affinity.t_high = parse_number<double>(value, key);
      } else if (key == "features") {
        c.features = FeatureSet::parse(value);
      } else if (key == "patch_channels") {
        c.arch.channels = parse_number<int>(value, key);
      } else if (key == "patch_height") {
        c.arch.height = parse_number<int>(value, key);
      } else if (key == "patch_width") {
        c.arch.width = parse_number<int>(value, key);
      } else if (key == "filters") {
        c.arch.filters = parse_int_list(value, key);
      } else if (key == "latent_dim") {
        c.arch.latent_dim = parse_number<int>(value, key);
      } else if (key == "kernel") {
        c.arch.kernel = parse_number<int>(value, key);
      } else if (key == "batchnorm") {
        c.arch.batchnorm = parse_bool(value, key);
      } else if (key == "epochs") {
        c.training.epochs = parse_number<int>(value, key);
      } else if (key == "learning_rate") {
        c.training.learning_rate = parse_number<double>(value, key);
      } else if (key == "lr_decay") {
        c.training.exponential_decay = parse_bool(value, key);
      } else if (key == "lambda_schedule") {
        c.training.lambda_schedule.clear();
        for (const auto& step : split(value, ',')) {
          const auto colon = step.find(':');
          if (colon == std::string::npos) throw std::invalid_argument("lambda_schedule entries look like epoch:lambda");
          c.training.lambda_schedule.push_back(
              {parse_number<int>(trim(step.substr(0, colon)), key), parse_number<double>(trim(step.substr(colon + 1)), key)});
        }
      } else if (key == "gradient_clip") {
        c.training.gradient_clip = parse_number<double>(value, key);
      } else if (key == "plateau_patience") {
        c.training.plateau_patience = parse_number<int>(value, key);
      } else if (key == "l2") {
        c.logistic.l2 = parse_number<double>(value, key);
      } else if (key == "seed") {
        c.seed = parse_number<std::uint64_t>(value, key);
      } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  c.training.seed = c.seed;
  c.validate();
  return c;
}

PipelineConfig read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  return read_config(in);
}

void write_config(std::ostream& out, const PipelineConfig& c) {
  out << "max_frame_gap = " << c.max_frame_gap << '\n';
  out << "lifted_gaps = " << (c.lifted_gaps.empty() ? std::string("none") : join(c.lifted_gaps)) << '\n';
  out << "lifted_tracklet_labels = " << (c.lifted_tracklet_labels ? "true" : "false") << '\n';
  out << "lifted_quantile = " << format_double(c.lifted_quantile) << '\n';
  out << "pregroup_threshold = " << format_double(c.pregroup.threshold) << '\n';
  out << "pregroup_max_gap = " << c.pregroup.max_frame_gap << '\n';
  out << "min_cluster_size = " << c.min_cluster_size << '\n';
  out << "t_low = " << format_double(c.affinity.t_low) << '\n';
  out << "t_high = " << format_double(c.affinity.t_high) << '\n';
  out << "features = " << c.features.name() << '\n';
  out << "patch_channels = " << c.arch.channels << '\n';
  out << "patch_height = " << c.arch.height << '\n';
  out << "patch_width = " << c.arch.width << '\n';
  out << "filters = " << (c.arch.filters.empty() ? std::string("none") : join(c.arch.filters)) << '\n';
  out << "latent_dim = " << c.arch.latent_dim << '\n';
  out << "kernel = " << c.arch.kernel << '\n';
  out << "batchnorm = " << (c.arch.batchnorm ? "true" : "false") << '\n';
  out << "epochs = " << c.training.epochs << '\n';
  out << "learning_rate = " << format_double(c.training.learning_rate) << '\n';
  out << "lr_decay = " << (c.training.exponential_decay ? "true" : "false") << '\n';
  out << "lambda_schedule = ";
  for (std::size_t i = 0; i < c.training.lambda_schedule.size(); ++i) {
    if (i) out << ',';
    out << c.training.lambda_schedule[i].epoch << ':' << format_double(c.training.lambda_schedule[i].lambda);
  }
  out << '\n';
  out << "gradient_clip = " << format_double(c.training.gradient_clip) << '\n';
  out << "plateau_patience = " << c.training.plateau_patience << '\n';
  out << "l2 = " << format_double(c.logistic.l2) << '\n';
  out << "seed = " << c.seed << '\n';
}

AffinityModels read_affinity(std::istream& in) {
  AffinityModels models;
  bool have_nearby = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string role;
    std::string features;
    if (!(fields >> role)) continue;
    const auto where = "affinity line " + std::to_string(line_no);
    if (!(fields >> features)) throw std::invalid_argument(where + ": missing feature set");
    AffinityModel m;
    try {
      m.features = FeatureSet::parse(features);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
    std::string token;
    while (fields >> token) m.beta.push_back(parse_number<double>(token, where));
    if (m.beta.size() != m.features.size()) {
      throw std::invalid_argument(where + ": expected " + std::to_string(m.features.size()) + " coefficients");
    }
    if (role == "nearby") {
      models.nearby = m;
      have_nearby = true;
    } else if (role == "lifted") {
      models.lifted = m;
    } else {
      throw std::invalid_argument(where + ": unknown model role '" + role + "'");
    }
  }
  if (!have_nearby) throw std::invalid_argument("affinity file has no 'nearby' model");
  return models;
}

AffinityModels read_affinity_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open affinity file " + path.string());
  return read_affinity(in);
}

void write_affinity(std::ostream& out, const AffinityModels& models) {
  auto line = [&](const char* role, const AffinityModel& m) {
    out << role << ' ' << m.features.name();
    for (double b : m.beta) out << ' ' << format_double(b);
    out << '\n';
  };
  line("nearby", models.nearby);
  if (models.lifted) line("lifted", *models.lifted);
}

}  // namespace selftrack
