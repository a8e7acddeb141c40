#include "ampnn/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <system_error>

namespace ampnn {

using nlohmann::json;

std::string format_real(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw IoError("failed to format a real number");
  return std::string(buf, end);
}

double parse_real(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) throw ValidationError("'" + text + "' is not a decimal real");
  return value;
}

namespace {

std::string fixed6(double value) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << value;
  return out.str();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!j.is_object()) throw ValidationError(context + ": expected a JSON object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : j.items())
    if (!keys.count(item.key())) throw ValidationError(context + ": unknown key '" + item.key() + "'");
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) throw ValidationError(context + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(context + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& context) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return get_field<T>(j, key, context);
}

json role_to_json(const NeuronRole<double>& role) {
  json j;
  j["primary"] = to_string(role.primary.kind);
  if (role.primary.kind == PrimaryKind::ParametricSoftplus) j["a"] = role.primary.a;
  j["secondary"] = to_string(role.secondary.kind);
  if (role.secondary.kind == SecondaryKind::Attenuate) j["b"] = role.secondary.b;
  return j;
}

PrimaryActivation<double> primary_from(const std::string& kind, double a) {
  switch (parse_primary_kind(kind)) {
    case PrimaryKind::ParametricSoftplus: return PrimaryActivation<double>::parametric_softplus(a);
    case PrimaryKind::Identity: return PrimaryActivation<double>::identity();
    case PrimaryKind::ReLU: return PrimaryActivation<double>::relu();
  }
  return PrimaryActivation<double>::identity();
}

NeuronRole<double> role_from_json(const json& j, const std::string& context) {
  check_keys(j, {"primary", "a", "secondary", "b"}, context);
  NeuronRole<double> role;
  role.primary = primary_from(get_field<std::string>(j, "primary", context),
                              get_or<double>(j, "a", kDefaultSoftplusSlope, context));
  switch (parse_secondary_kind(get_field<std::string>(j, "secondary", context))) {
    case SecondaryKind::None: role.secondary = SecondaryActivation<double>::none(); break;
    case SecondaryKind::Amplify: role.secondary = SecondaryActivation<double>::amplify(); break;
    case SecondaryKind::Attenuate:
      role.secondary = SecondaryActivation<double>::attenuate(get_or<double>(j, "b", kDefaultAttenuation, context));
      break;
  }
  return role;
}

}  // namespace

json config_to_json(const NetworkConfigD& config) {
  json j;
  j["input_dim"] = config.input_dim;
  j["output_dim"] = config.output_dim;
  j["special_layers"] =
      config.special_layers ? json::array({config.special_layers->first, config.special_layers->last}) : json();
  json layers = json::array();
  for (const auto& layer : config.hidden_layers) {
    json l;
    l["width"] = layer.width;
    l["n_amplifying"] = layer.n_amplifying;
    l["n_attenuating"] = layer.n_attenuating;
    json roles = json::array();
    for (const auto& role : layer.roles) roles.push_back(role_to_json(role));
    l["roles"] = std::move(roles);
    layers.push_back(std::move(l));
  }
  j["hidden_layers"] = std::move(layers);
  return j;
}

NetworkConfigD config_from_json(const json& j) {
  const std::string ctx = "config";
  check_keys(j, {"input_dim", "output_dim", "special_layers", "hidden_layers"}, ctx);
  NetworkConfigD config;
  config.input_dim = get_field<Index>(j, "input_dim", ctx);
  config.output_dim = get_or<Index>(j, "output_dim", 1, ctx);
  if (j.contains("special_layers") && !j.at("special_layers").is_null()) {
    const auto range = get_field<std::vector<int>>(j, "special_layers", ctx);
    if (range.size() != 2) throw ValidationError(ctx + ": special_layers must be [first, last]");
    config.special_layers = LayerRange{range[0], range[1]};
  }
  const json& layers = j.contains("hidden_layers") ? j.at("hidden_layers") : json::array();
  if (!layers.is_array()) throw ValidationError(ctx + ": hidden_layers must be an array");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const std::string lctx = ctx + ".hidden_layers[" + std::to_string(k) + "]";
    const json& l = layers[k];
    check_keys(l, {"width", "n_amplifying", "n_attenuating", "roles", "primary", "a", "b"}, lctx);
    const auto width = get_field<Index>(l, "width", lctx);
    const auto n_amp = get_or<Index>(l, "n_amplifying", 0, lctx);
    const auto n_att = get_or<Index>(l, "n_attenuating", 0, lctx);
    if (l.contains("roles")) {
      LayerSpecD spec;
      spec.width = width;
      spec.n_amplifying = n_amp;
      spec.n_attenuating = n_att;
      const json& roles = l.at("roles");
      if (!roles.is_array()) throw ValidationError(lctx + ": roles must be an array");
      for (std::size_t r = 0; r < roles.size(); ++r)
        spec.roles.push_back(role_from_json(roles[r], lctx + ".roles[" + std::to_string(r) + "]"));
      config.hidden_layers.push_back(std::move(spec));
    } else {
      const auto primary = primary_from(get_or<std::string>(l, "primary", "parametric_softplus", lctx),
                                        get_or<double>(l, "a", kDefaultSoftplusSlope, lctx));
      config.hidden_layers.push_back(LayerSpecD::with_counts(width, n_amp, n_att, primary,
                                                             get_or<double>(l, "b", kDefaultAttenuation, lctx)));
    }
  }
  config.validate();
  return config;
}

json training_to_json(const TrainingConfig& cfg) {
  return json{{"learning_rate", cfg.learning_rate}, {"beta1", cfg.beta1},         {"beta2", cfg.beta2},
              {"epsilon", cfg.epsilon},             {"l2_lambda", cfg.l2_lambda}, {"epochs", cfg.epochs},
              {"shuffle_seed", cfg.shuffle_seed},   {"init_seed", cfg.init_seed}, {"log_interval", cfg.log_interval}};
}

TrainingConfig training_from_json(const json& j, TrainingConfig base) {
  const std::string ctx = "training";
  check_keys(j,
             {"learning_rate", "beta1", "beta2", "epsilon", "l2_lambda", "epochs", "shuffle_seed", "init_seed",
              "log_interval"},
             ctx);
  base.learning_rate = get_or(j, "learning_rate", base.learning_rate, ctx);
  base.beta1 = get_or(j, "beta1", base.beta1, ctx);
  base.beta2 = get_or(j, "beta2", base.beta2, ctx);
  base.epsilon = get_or(j, "epsilon", base.epsilon, ctx);
  base.l2_lambda = get_or(j, "l2_lambda", base.l2_lambda, ctx);
  base.epochs = get_or(j, "epochs", base.epochs, ctx);
  base.shuffle_seed = get_or(j, "shuffle_seed", base.shuffle_seed, ctx);
  base.init_seed = get_or(j, "init_seed", base.init_seed, ctx);
  base.log_interval = get_or(j, "log_interval", base.log_interval, ctx);
  return base;
}

json report_to_json(const EvalReport& report) {
  json location = json::array();
  for (Index i = 0; i < report.max_error_location.size(); ++i) location.push_back(report.max_error_location[i]);
  return json{{"mae", report.mae},
              {"sd", report.sd},
              {"max_abs_error", report.max_abs_error},
              {"max_error_location", location},
              {"target", report.target},
              {"grid_resolution", report.grid_resolution},
              {"grid_points", report.grid_points}};
}

std::string model_to_string(const ModelFile& model) {
  const auto& params = model.network.parameters();
  json weights = json::array();
  for (const auto& w : params.weights) {
    json rows = json::array();
    for (Index r = 0; r < w.rows(); ++r) {
      json row = json::array();
      for (Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
  }
  json biases = json::array();
  for (const auto& b : params.biases) {
    json layer = json::array();
    for (Index r = 0; r < b.size(); ++r) layer.push_back(b[r]);
    biases.push_back(std::move(layer));
  }
  json provenance{{"origin", model.provenance.origin}, {"dataset", model.provenance.dataset}};
  provenance["training"] = model.provenance.training ? training_to_json(*model.provenance.training) : json();
  provenance["run_index"] = model.provenance.run_index ? json(*model.provenance.run_index) : json();

  json j{{"format_version", model.format_version},
         {"config", config_to_json(model.network.config())},
         {"weights", std::move(weights)},
         {"biases", std::move(biases)},
         {"provenance", std::move(provenance)}};
  return j.dump(2) + "\n";
}

ModelFile model_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
  }
  const std::string ctx = "model";
  check_keys(j, {"format_version", "config", "weights", "biases", "provenance"}, ctx);
  const int version = get_field<int>(j, "format_version", ctx);
  if (version != kModelFormatVersion)
    throw ValidationError("unsupported model format_version " + std::to_string(version));
  NetworkConfigD config = config_from_json(get_field<json>(j, "config", ctx));

  ParametersD params;
  const auto weights = get_field<std::vector<std::vector<std::vector<double>>>>(j, "weights", ctx);
  const auto biases = get_field<std::vector<std::vector<double>>>(j, "biases", ctx);
  for (const auto& layer : weights) {
    const Index rows = static_cast<Index>(layer.size());
    const Index cols = rows == 0 ? 0 : static_cast<Index>(layer.front().size());
    Eigen::MatrixXd w(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      const auto& row = layer[static_cast<std::size_t>(r)];
      if (static_cast<Index>(row.size()) != cols) throw ValidationError("model: ragged weight matrix");
      for (Index c = 0; c < cols; ++c) w(r, c) = row[static_cast<std::size_t>(c)];
    }
    params.weights.push_back(std::move(w));
  }
  for (const auto& layer : biases)
    params.biases.push_back(Eigen::Map<const Eigen::VectorXd>(layer.data(), static_cast<Index>(layer.size())));

  ModelProvenance provenance;
  if (j.contains("provenance")) {
    const json& p = j.at("provenance");
    const std::string pctx = "model.provenance";
    check_keys(p, {"origin", "dataset", "training", "run_index"}, pctx);
    provenance.origin = get_or<std::string>(p, "origin", "", pctx);
    provenance.dataset = get_or<std::string>(p, "dataset", "", pctx);
    if (p.contains("training") && !p.at("training").is_null())
      provenance.training = training_from_json(p.at("training"));
    if (p.contains("run_index") && !p.at("run_index").is_null())
      provenance.run_index = get_field<int>(p, "run_index", pctx);
  }
  return ModelFile{NetworkD(std::move(config), std::move(params)), std::move(provenance), version};
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out << text;
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

void save_model(const std::filesystem::path& path, const ModelFile& model) { write_text(path, model_to_string(model)); }

ModelFile load_model(const std::filesystem::path& path) { return model_from_string(read_text(path)); }

std::string dataset_to_csv(const Dataset& data) {
  std::string out = data.input_dim() == 1 ? "x,y\n" : "x,y,z\n";
  for (Index i = 0; i < data.size(); ++i) {
    for (Index d = 0; d < data.input_dim(); ++d) {
      out += format_real(data.inputs(d, i));
      out += ',';
    }
    out += format_real(data.targets[i]);
    out += '\n';
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) { write_text(path, dataset_to_csv(data)); }

Dataset dataset_from_csv(const std::string& text, const TargetFunction& target, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  const std::string where = origin.empty() ? "dataset" : origin;
  auto fail = [&](std::size_t line_no, const std::string& what) {
    throw ValidationError(where + ":" + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line)) throw ValidationError(where + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string expected = target.input_dim == 1 ? "x,y" : "x,y,z";
  if (line != expected) fail(1, "expected header '" + expected + "', got '" + line + "'");

  std::vector<double> values;
  std::size_t line_no = 1;
  const auto columns = static_cast<std::size_t>(target.input_dim + 1);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      try {
        row.push_back(parse_real(field));
      } catch (const ValidationError&) {
        fail(line_no, "malformed field '" + field + "'");
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != columns)
      fail(line_no,
           "expected " + std::to_string(columns) + " columns, got " + std::to_string(row.size()));
    Eigen::Map<const Eigen::VectorXd> x(row.data(), target.input_dim);
    if (!target.in_domain(x)) fail(line_no, "point lies outside the " + target.name() + " domain");
    const double exact = target(x);
    if (!(std::abs(row.back() - exact) <= 1e-6)) {
      std::ostringstream msg;
      msg << "target " << format_real(row.back()) << " deviates from exact value " << format_real(exact);
      throw IntegrityError(where + ":" + std::to_string(line_no) + ": " + msg.str());
    }
    values.insert(values.end(), row.begin(), row.end());
  }

  const Index n = static_cast<Index>(values.size() / columns);
  if (n == 0) throw ValidationError(where + ": no data rows");
  Dataset data;
  data.inputs.resize(target.input_dim, n);
  data.targets.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index d = 0; d < target.input_dim; ++d)
      data.inputs(d, i) = values[static_cast<std::size_t>(i) * columns + static_cast<std::size_t>(d)];
    data.targets[i] = values[static_cast<std::size_t>(i) * columns + columns - 1];
  }
  data.provenance = {"file", target.name(), n, 0, origin};
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, const TargetFunction& target) {
  return dataset_from_csv(read_text(path), target, path.string());
}

std::string grid_to_csv(const EvalGrid& grid) {
  const bool two_d = grid.points.rows() == 2;
  std::string out = two_d ? "x,y,z_net,z_exact,error\n" : "x,y_net,y_exact,error\n";
  for (Index i = 0; i < grid.points.cols(); ++i) {
    for (Index d = 0; d < grid.points.rows(); ++d) {
      out += format_real(grid.points(d, i));
      out += ',';
    }
    out += format_real(grid.predicted[i]);
    out += ',';
    out += format_real(grid.exact[i]);
    out += ',';
    out += format_real(grid.predicted[i] - grid.exact[i]);
    out += '\n';
  }
  return out;
}

TargetFunction RunManifest::target_function() const {
  if (target) return ampnn::target_function(*target);
  if (preset) return ampnn::target_function(ampnn::preset(*preset).target());
  if (table) return ampnn::target_function(*table == 1 ? Target::OneDimensional : Target::Ackley2D);
  throw ValidationError("manifest: a target is required when no preset is given");
}

NetworkConfigD RunManifest::network_config() const {
  if (config) return *config;
  if (preset) return ampnn::preset(*preset).config();
  throw ValidationError("manifest: either 'preset' or 'config' is required");
}

void RunManifest::validate() const {
  if (preset && config) throw ValidationError("manifest: give either 'preset' or 'config', not both");
  if (table && *table != 1 && *table != 2) throw ValidationError("manifest: table must be 1 or 2");
  if (n_runs && *n_runs < 1) throw ValidationError("manifest: n_runs must be at least 1");
  if (grid_resolution && *grid_resolution < 2) throw ValidationError("manifest: grid_resolution must be at least 2");
  if (!dataset.source.empty() && dataset.source != "grid" && dataset.source != "random" && dataset.source != "file")
    throw ValidationError("manifest: dataset.source must be grid, random or file");
  if (dataset.source == "file" && dataset.path.empty())
    throw ValidationError("manifest: dataset.path is required for file datasets");
  training.validate();
  if (preset || config) {
    const auto cfg = network_config();
    cfg.validate();
    const auto fn = target_function();
    if (cfg.input_dim != fn.input_dim)
      throw ValidationError("manifest: network input_dim does not match target " + fn.name());
  }
}

RunManifest manifest_from_json(const json& j) {
  const std::string ctx = "manifest";
  check_keys(j,
             {"preset", "config", "target", "training", "dataset", "n_runs", "base_seed", "grid_resolution",
              "threads", "output_dir", "table", "networks"},
             ctx);
  RunManifest m;
  if (j.contains("preset")) m.preset = get_field<std::string>(j, "preset", ctx);
  if (j.contains("config")) m.config = config_from_json(j.at("config"));
  if (j.contains("target")) m.target = get_field<std::string>(j, "target", ctx);
  if (j.contains("training")) m.training = training_from_json(j.at("training"));
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    const std::string dctx = ctx + ".dataset";
    check_keys(d, {"source", "n", "seed", "path"}, dctx);
    m.dataset.source = get_or<std::string>(d, "source", m.dataset.source, dctx);
    m.dataset.n = get_or<Index>(d, "n", m.dataset.n, dctx);
    m.dataset.seed = get_or<std::uint64_t>(d, "seed", m.dataset.seed, dctx);
    m.dataset.path = get_or<std::string>(d, "path", m.dataset.path, dctx);
  }
  if (j.contains("n_runs")) m.n_runs = get_field<int>(j, "n_runs", ctx);
  m.base_seed = get_or<std::uint64_t>(j, "base_seed", m.base_seed, ctx);
  if (j.contains("grid_resolution")) m.grid_resolution = get_field<Index>(j, "grid_resolution", ctx);
  m.threads = get_or<unsigned>(j, "threads", m.threads, ctx);
  m.output_dir = get_or<std::string>(j, "output_dir", m.output_dir, ctx);
  if (j.contains("table")) m.table = get_field<int>(j, "table", ctx);
  m.networks = get_or<std::vector<std::string>>(j, "networks", {}, ctx);
  if (m.preset) preset(*m.preset);
  for (const auto& name : m.networks) preset(name);
  return m;
}

RunManifest load_manifest(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return manifest_from_json(j);
}

Dataset manifest_dataset(const RunManifest& manifest) {
  const TargetFunction fn = manifest.target_function();
  const auto& spec = manifest.dataset;
  if (spec.source == "file") return load_dataset(spec.path, fn);
  const bool one_d = fn.kind == Target::OneDimensional;
  const Index n = spec.n > 0 ? spec.n : (one_d ? 194 : 300);
  if (spec.source.empty()) return one_d ? generate_1d_dataset(n) : generate_2d_dataset(n, spec.seed);
  if (spec.source == "grid") {
    if (!one_d) throw ValidationError("manifest: grid datasets are only defined for the 1d target");
    return generate_1d_dataset(n);
  }
  if (one_d) throw ValidationError("manifest: random datasets are only defined for the ackley target");
  return generate_2d_dataset(n, spec.seed);
}

std::string table_to_csv(const ReproducedTable& table) {
  std::string out = "network,depth,width,n_amplifying,n_attenuating,paper_mae,paper_sd,repro_mae,repro_sd,ratio\n";
  for (const auto& row : table.rows) {
    const auto& p = row.preset;
    out += p.name + ',' + std::to_string(p.depth) + ',' + std::to_string(p.width) + ',' +
           std::to_string(p.n_amplifying) + ',' + std::to_string(p.n_attenuating) + ',' + fixed6(p.paper_mae) + ',' +
           fixed6(p.paper_sd) + ',';
    if (row.result) {
      const auto& eval = row.result->best().eval;
      out += format_real(eval.mae) + ',' + format_real(eval.sd) + ',' + format_real(eval.mae / p.paper_mae);
    } else {
      out += ",,";
    }
    out += '\n';
  }
  return out;
}

std::string table_summary(const ReproducedTable& table) {
  std::ostringstream out;
  out << "Table " << table.table << " reproduction (" << table.training.size() << " training points)\n\n";
  out << std::left << std::setw(12) << "network" << std::right << std::setw(12) << "paper MAE" << std::setw(12)
      << "paper SD" << std::setw(14) << "repro MAE" << std::setw(14) << "repro SD" << std::setw(10) << "ratio"
      << "  runs ok\n";
  for (const auto& row : table.rows) {
    const auto& p = row.preset;
    out << std::left << std::setw(12) << p.name << std::right << std::setw(12) << fixed6(p.paper_mae)
        << std::setw(12) << fixed6(p.paper_sd);
    const int total = row.result ? static_cast<int>(row.result->runs.size()) : row.failed_runs;
    if (row.result) {
      const auto& eval = row.result->best().eval;
      out << std::setw(14) << fixed6(eval.mae) << std::setw(14) << fixed6(eval.sd) << std::setw(10)
          << std::setprecision(3) << std::fixed << eval.mae / p.paper_mae;
    } else {
      out << std::setw(14) << "failed" << std::setw(14) << "-" << std::setw(10) << "-";
    }
    out << "  " << total - row.failed_runs << "/" << total << "\n";
    if (!row.failure.empty()) out << "    failure: " << row.failure << "\n";
  }
  out << "\nOrderings\n";
  for (const auto& claim : ordering_claims(table)) out << "  " << claim.description << ": " << claim.status << "\n";
  return out.str();
}

}  // namespace ampnn
