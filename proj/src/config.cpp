#include "risu/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace risu {
namespace {

using nlohmann::json;

class Section {
 public:
  Section(const json& node, std::string path, std::set<std::string> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where() + " must be an object");
    for (const auto& [key, value] : node_.items()) {
      if (!allowed.count(key)) throw ConfigError(where(key) + ": unknown key");
    }
  }

  bool has(const std::string& key) const { return node_.contains(key); }
  const json& at(const std::string& key) const { return node_.at(key); }
  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  template <class T>
  void read(const std::string& key, T& out) const {
    if (!has(key)) return;
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + ": wrong type");
    }
  }

  void read_index(const std::string& key, Index& out) const {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    out = v.get<Index>();
  }

  void read_range(const std::string& key, SineRange& out) const {
    if (!has(key)) return;
    out = parse_range(node_.at(key), where(key));
  }

  static SineRange parse_range(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ConfigError(where + ": expected [lower, upper]");
    return {v[0].get<double>(), v[1].get<double>()};
  }

 private:
  const json& node_;
  std::string path_;
};

// SNRs are numbers in dB or the string "inf" for noiseless sounding.
double snr_from_json(const json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && v.get<std::string>() == "inf") return kNoiselessSnrDb;
  throw ConfigError(where + ": expected an SNR in dB or \"inf\"");
}

std::vector<double> snr_list_from_json(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected a list of SNRs");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(snr_from_json(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

json snr_to_json(double snr_db) { return std::isinf(snr_db) ? json("inf") : json(snr_db); }

json snr_list_to_json(const std::vector<double>& snrs) {
  json out = json::array();
  for (double s : snrs) out.push_back(snr_to_json(s));
  return out;
}

}  // namespace

ExperimentSpec parse_experiment_config(const json& doc,
                                       const std::optional<std::string>& profile_override) {
  const Section top(doc, "", {"schema_version", "profile", "seed", "channel", "sounding",
                              "network", "data", "study"});
  if (!top.has("schema_version")) throw ConfigError("schema_version: missing");
  int version = 0;
  top.read("schema_version", version);
  if (version != kConfigSchemaVersion)
    throw ConfigError("schema_version: unsupported version " + std::to_string(version));

  std::string profile = "desk";
  top.read("profile", profile);
  if (profile_override) profile = *profile_override;
  ExperimentSpec spec = profile_by_name(profile);
  spec.profile = profile;

  if (top.has("seed")) {
    const json& s = top.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      throw ConfigError("seed: expected a non-negative integer");
    spec.seed = s.get<std::uint64_t>();
  }

  if (top.has("channel")) {
    const Section c(top.at("channel"), "channel",
                    {"M", "N", "L1", "L2", "var_los", "var_nlos", "angle_sine_range"});
    c.read_index("M", spec.channel.M);
    c.read_index("N", spec.channel.N);
    c.read_index("L1", spec.channel.L1);
    c.read_index("L2", spec.channel.L2);
    c.read("var_los", spec.channel.var_los);
    c.read("var_nlos", spec.channel.var_nlos);
    c.read_range("angle_sine_range", spec.channel.angle_sine_range);
  }

  if (top.has("sounding")) {
    const Section s(top.at("sounding"), "sounding", {"K", "N_W", "snr_db"});
    s.read_index("K", spec.sounding.K);
    s.read_index("N_W", spec.sounding.N_W);
    if (s.has("snr_db")) spec.sounding.snr_db = snr_from_json(s.at("snr_db"), "sounding.snr_db");
  }

  if (top.has("network")) {
    const Section n(top.at("network"), "network",
                    {"layers", "epochs", "batch_size", "learning_rate", "decay_after_epoch",
                     "decay_factor"});
    n.read_index("layers", spec.network.layers);
    n.read("epochs", spec.network.schedule.epochs);
    n.read_index("batch_size", spec.network.schedule.batch_size);
    n.read("learning_rate", spec.network.schedule.learning_rate);
    n.read("decay_after_epoch", spec.network.schedule.decay_after_epoch);
    n.read("decay_factor", spec.network.schedule.decay_factor);
  }

  bool train_mixed = spec.data.train_policy.is_mixed();
  if (top.has("data")) {
    const Section d(top.at("data"), "data",
                    {"n_train", "n_test", "train_snr_db", "mixed_snrs_db", "test_snrs_db"});
    d.read_index("n_train", spec.data.n_train);
    d.read_index("n_test", spec.data.n_test);
    if (d.has("mixed_snrs_db"))
      spec.data.mixed_snrs_db = snr_list_from_json(d.at("mixed_snrs_db"), "data.mixed_snrs_db");
    if (d.has("test_snrs_db"))
      spec.data.test_snrs_db = snr_list_from_json(d.at("test_snrs_db"), "data.test_snrs_db");
    if (d.has("train_snr_db")) {
      const json& t = d.at("train_snr_db");
      if (t.is_string() && t.get<std::string>() == "mixed") {
        train_mixed = true;
      } else {
        train_mixed = false;
        spec.data.train_policy = SnrPolicy::fixed(snr_from_json(t, "data.train_snr_db"));
      }
    }
  }
  if (train_mixed) spec.data.train_policy = SnrPolicy::mixed(spec.data.mixed_snrs_db);

  if (top.has("study")) {
    const Section s(top.at("study"), "study",
                    {"overhead_unfold_K", "overhead_ls_K", "path_counts", "sine_ranges",
                     "include_svt", "svt_samples"});
    s.read("overhead_unfold_K", spec.study.overhead_unfold_K);
    s.read_index("overhead_ls_K", spec.study.overhead_ls_K);
    s.read("path_counts", spec.study.path_counts);
    if (s.has("sine_ranges")) {
      const json& rs = s.at("sine_ranges");
      if (!rs.is_array()) throw ConfigError("study.sine_ranges: expected a list of ranges");
      spec.study.sine_ranges.clear();
      for (std::size_t i = 0; i < rs.size(); ++i) {
        spec.study.sine_ranges.push_back(
            Section::parse_range(rs[i], "study.sine_ranges[" + std::to_string(i) + "]"));
      }
    }
    s.read("include_svt", spec.study.include_svt);
    s.read_index("svt_samples", spec.study.svt_samples);
  }

  spec.validate();
  return spec;
}

ExperimentSpec load_experiment_config(const std::filesystem::path& path,
                                      const std::optional<std::string>& profile_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_experiment_config(doc, profile_override);
}

json to_json(const ExperimentSpec& spec) {
  const auto range = [](const SineRange& r) { return json::array({r.lower, r.upper}); };
  json ranges = json::array();
  for (const auto& r : spec.study.sine_ranges) ranges.push_back(range(r));

  json train_snr = spec.data.train_policy.is_mixed()
                       ? json("mixed")
                       : snr_to_json(spec.data.train_policy.snrs_db.front());
  json mixed = snr_list_to_json(spec.data.train_policy.is_mixed() ? spec.data.train_policy.snrs_db
                                                                  : spec.data.mixed_snrs_db);
  return {
      {"schema_version", kConfigSchemaVersion},
      {"profile", spec.profile},
      {"seed", spec.seed},
      {"channel",
       {{"M", spec.channel.M},
        {"N", spec.channel.N},
        {"L1", spec.channel.L1},
        {"L2", spec.channel.L2},
        {"var_los", spec.channel.var_los},
        {"var_nlos", spec.channel.var_nlos},
        {"angle_sine_range", range(spec.channel.angle_sine_range)}}},
      {"sounding",
       {{"K", spec.sounding.K}, {"N_W", spec.sounding.N_W}, {"snr_db", snr_to_json(spec.sounding.snr_db)}}},
      {"network",
       {{"layers", spec.network.layers},
        {"epochs", spec.network.schedule.epochs},
        {"batch_size", spec.network.schedule.batch_size},
        {"learning_rate", spec.network.schedule.learning_rate},
        {"decay_after_epoch", spec.network.schedule.decay_after_epoch},
        {"decay_factor", spec.network.schedule.decay_factor}}},
      {"data",
       {{"n_train", spec.data.n_train},
        {"n_test", spec.data.n_test},
        {"train_snr_db", train_snr},
        {"mixed_snrs_db", mixed},
        {"test_snrs_db", snr_list_to_json(spec.data.test_snrs_db)}}},
      {"study",
       {{"overhead_unfold_K", spec.study.overhead_unfold_K},
        {"overhead_ls_K", spec.study.overhead_ls_K},
        {"path_counts", spec.study.path_counts},
        {"sine_ranges", ranges},
        {"include_svt", spec.study.include_svt},
        {"svt_samples", spec.study.svt_samples}}},
  };
}

}  // namespace risu
