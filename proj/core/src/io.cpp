#include "probitgp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "probitgp/errors.hpp"

namespace probitgp {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& text, const std::string& path, std::size_t line) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    std::ostringstream msg;
    msg << path << ":" << line << ": cannot parse number '" << text << "'";
    throw ValidationError(msg.str());
  }
  return v;
}

int parse_label(const std::string& text, const std::string& path, std::size_t line) {
  if (text == "0") return 0;
  if (text == "1") return 1;
  std::ostringstream msg;
  msg << path << ":" << line << ": response must be 0 or 1, got '" << text << "'";
  throw ValidationError(msg.str());
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  Table t;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    auto cells = split_row(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      std::ostringstream msg;
      msg << path << ":" << number << ": expected " << t.header.size() << " fields, got " << cells.size();
      throw ValidationError(msg.str());
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(number);
  }
  if (t.header.empty()) throw ValidationError(path + ": missing header");
  return t;
}

// Column positions of x1..xq, y and truth_prob.
struct Columns {
  std::vector<std::size_t> coords;
  std::optional<std::size_t> y;
  std::optional<std::size_t> truth;
};

Columns locate_columns(const Table& t, const std::string& path) {
  Columns c;
  std::map<std::size_t, std::size_t> coords;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    const std::string& name = t.header[i];
    if (name == "y") {
      c.y = i;
    } else if (name == "truth_prob") {
      c.truth = i;
    } else if (name.size() > 1 && name[0] == 'x') {
      std::size_t k = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
      if (ec != std::errc() || ptr != name.data() + name.size() || k == 0) {
        throw ValidationError(path + ": unrecognized column '" + name + "'");
      }
      coords[k] = i;
    } else {
      throw ValidationError(path + ": unrecognized column '" + name + "'");
    }
  }
  for (std::size_t k = 1; k <= coords.size(); ++k) {
    if (!coords.count(k)) throw ValidationError(path + ": coordinate columns must be x1..xq without gaps");
    c.coords.push_back(coords[k]);
  }
  if (c.coords.empty()) throw ValidationError(path + ": no coordinate columns");
  return c;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << content;
  if (!out) throw ValidationError("failed writing " + path);
}

json estimate_json(const ProbEstimate& e) {
  json j;
  j["value"] = e.value;
  j["std_error"] = e.std_error;
  j["log_value"] = std::isfinite(e.log_value) ? json(e.log_value) : json(nullptr);
  j["samples"] = e.samples;
  return j;
}

json config_echo(const RunConfig& cfg) {
  json j;
  j["samples"] = cfg.samples;
  j["seed"] = cfg.seed;
  j["antithetic"] = cfg.antithetic;
  j["block_size"] = cfg.block_size;
  j["trunc_tol"] = cfg.trunc_tol;
  return j;
}

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::logic_error("format_double: buffer too small");
  return std::string(buf, ptr);
}

Dataset read_training_csv(const std::string& path) {
  const Table t = read_table(path);
  const Columns c = locate_columns(t, path);
  if (!c.y) throw ValidationError(path + ": training data needs a y column");
  if (t.rows.empty()) throw ValidationError(path + ": no data rows");

  Locations::Storage points(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(c.coords.size()));
  std::vector<int> y;
  std::vector<double> truth;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    for (std::size_t k = 0; k < c.coords.size(); ++k) {
      points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          parse_double(row[c.coords[k]], path, t.line_numbers[r]);
    }
    y.push_back(parse_label(row[*c.y], path, t.line_numbers[r]));
    if (c.truth) truth.push_back(parse_double(row[*c.truth], path, t.line_numbers[r]));
  }
  Dataset out{Locations::from_rows(std::move(points)), std::move(y), std::nullopt, {}};
  if (c.truth) out.truth_probs = std::move(truth);
  out.validate();
  return out;
}

std::vector<HoldoutPoint> read_holdout_csv(const std::string& path, std::size_t dim) {
  const Table t = read_table(path);
  const Columns c = locate_columns(t, path);
  if (c.coords.size() != dim) {
    std::ostringstream msg;
    msg << path << ": holdout has " << c.coords.size() << " coordinates, training data has " << dim;
    throw ValidationError(msg.str());
  }
  std::vector<HoldoutPoint> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    HoldoutPoint h;
    for (const std::size_t col : c.coords) h.x.push_back(parse_double(row[col], path, t.line_numbers[r]));
    if (c.truth) h.truth_prob = parse_double(row[*c.truth], path, t.line_numbers[r]);
    if (c.y) h.y = parse_label(row[*c.y], path, t.line_numbers[r]);
    out.push_back(std::move(h));
  }
  return out;
}

void write_training_csv(const std::string& path, const Dataset& data) {
  std::ostringstream out;
  for (std::size_t k = 0; k < data.locs.dim(); ++k) out << "x" << k + 1 << ",";
  out << "y" << (data.truth_probs ? ",truth_prob" : "") << "\n";
  for (std::size_t i = 0; i < data.locs.size(); ++i) {
    for (const double v : data.locs.point(i)) out << format_double(v) << ",";
    out << data.y[i];
    if (data.truth_probs) out << "," << format_double((*data.truth_probs)[i]);
    out << "\n";
  }
  write_file(path, out.str());
}

void write_holdout_csv(const std::string& path, const std::vector<HoldoutPoint>& holdout) {
  if (holdout.empty()) throw ValidationError("no holdout points to write");
  const bool truth = holdout.front().truth_prob.has_value();
  const bool labels = holdout.front().y.has_value();
  std::ostringstream out;
  for (std::size_t k = 0; k < holdout.front().x.size(); ++k) out << (k ? "," : "") << "x" << k + 1;
  if (truth) out << ",truth_prob";
  if (labels) out << ",y";
  out << "\n";
  for (const auto& h : holdout) {
    for (std::size_t k = 0; k < h.x.size(); ++k) out << (k ? "," : "") << format_double(h.x[k]);
    if (truth) out << "," << format_double(h.truth_prob.value());
    if (labels) out << "," << h.y.value();
    out << "\n";
  }
  write_file(path, out.str());
}

void write_predictions_csv(const std::string& path, const std::vector<ProbEstimate>& predictions) {
  std::ostringstream out;
  out << "id,probability,std_error\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out << i << "," << format_double(predictions[i].value) << "," << format_double(predictions[i].std_error) << "\n";
  }
  write_file(path, out.str());
}

void apply_config_json(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config " + path + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "method") {
      cfg.method = parse_method(get_as<std::string>(value, key));
    } else if (key == "samples") {
      cfg.samples = get_as<std::size_t>(value, key);
    } else if (key == "seed") {
      cfg.seed = get_as<std::uint64_t>(value, key);
    } else if (key == "antithetic") {
      cfg.antithetic = get_as<bool>(value, key);
    } else if (key == "block_size") {
      cfg.block_size = get_as<std::size_t>(value, key);
    } else if (key == "trunc_tol") {
      cfg.trunc_tol = get_as<double>(value, key);
    } else if (key == "alpha") {
      cfg.alpha = get_as<double>(value, key);
    } else if (key == "alpha_min") {
      cfg.grid.min = get_as<double>(value, key);
    } else if (key == "alpha_max") {
      cfg.grid.max = get_as<double>(value, key);
    } else if (key == "alpha_count") {
      cfg.grid.count = get_as<std::size_t>(value, key);
    } else if (key == "cavi_tol") {
      cfg.cavi_tol = get_as<double>(value, key);
    } else if (key == "cavi_max_iter") {
      cfg.cavi_max_iter = get_as<std::size_t>(value, key);
    } else {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
}

void write_metrics_json(const std::string& path, const MetricsReport& r) {
  json j;
  j["method"] = to_string(r.method);
  j["n"] = r.n;
  j["holdout"] = r.holdout;
  j["samples"] = r.samples;
  j["seed"] = r.seed;
  j["alpha"] = r.alpha;
  j["mse"] = r.mse ? json(*r.mse) : json(nullptr);
  j["auc"] = r.auc ? json(*r.auc) : json(nullptr);
  j["auc_omitted"] = r.auc_omitted;
  if (r.cavi_iterations) j["cavi_iterations"] = *r.cavi_iterations;
  if (r.cavi_converged) j["cavi_converged"] = *r.cavi_converged;
  write_file(path, j.dump(2) + "\n");
}

void write_timing_json(const std::string& path, const MetricsReport& r) {
  json j;
  j["method"] = to_string(r.method);
  j["n"] = r.n;
  j["holdout"] = r.holdout;
  j["setup_seconds"] = r.setup_seconds;
  j["per_prediction_seconds"] = r.per_prediction_seconds;
  write_file(path, j.dump(2) + "\n");
}

void write_alpha_fit_json(const std::string& path, const AlphaFit& fit, std::size_t n, const RunConfig& cfg) {
  json j = config_echo(cfg);
  j["n"] = n;
  j["alpha_hat"] = fit.alpha_hat;
  json curve = json::array();
  for (const auto& p : fit.curve) {
    json e = estimate_json(p.estimate);
    e["alpha"] = p.alpha;
    curve.push_back(std::move(e));
  }
  j["curve"] = std::move(curve);
  write_file(path, j.dump(2) + "\n");
}

void write_loglik_json(const std::string& path, double alpha, const ProbEstimate& est, std::size_t n,
                       const RunConfig& cfg, const std::string& method) {
  json j = config_echo(cfg);
  j["n"] = n;
  j["alpha"] = alpha;
  j["method"] = method;
  j["estimate"] = estimate_json(est);
  write_file(path, j.dump(2) + "\n");
}

}  // namespace probitgp
