#include <sqvi/diagnostics.h>
#include <sqvi/problems.h>
#include <sqvi/runner.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

namespace sqvi {

using nlohmann::json;

namespace {

[[noreturn]] void Bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::kConfigError, "key '" + key + "': " + what);
}

// Reads typed keys from one JSON object, records which keys were consumed
// and writes the normalized value (explicit or default) to `out`.
class Reader {
 public:
  Reader(const json& j, std::string scope, bool strict,
         std::vector<std::string>* warnings)
      : j_(j), scope_(std::move(scope)), strict_(strict), warnings_(warnings) {
    if (!j_.is_object()) Bad(scope_.empty() ? "<root>" : scope_, "expected an object");
  }

  std::string Key(const std::string& k) const {
    return scope_.empty() ? k : scope_ + "." + k;
  }

  const json* Find(const std::string& k) {
    seen_.insert(k);
    const auto it = j_.find(k);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  double Double(const std::string& k, double def) {
    const json* v = Find(k);
    double r = def;
    if (v) {
      if (!v->is_number()) Bad(Key(k), "expected a number");
      r = v->get<double>();
      if (!std::isfinite(r)) Bad(Key(k), "must be finite");
    }
    out[k] = r;
    return r;
  }

  std::optional<double> OptDouble(const std::string& k) {
    const json* v = Find(k);
    if (!v) {
      out[k] = nullptr;
      return std::nullopt;
    }
    if (!v->is_number()) Bad(Key(k), "expected a number");
    out[k] = v->get<double>();
    return v->get<double>();
  }

  std::int64_t Int(const std::string& k, std::int64_t def) {
    const json* v = Find(k);
    std::int64_t r = def;
    if (v) {
      if (v->is_number_integer()) {
        r = v->get<std::int64_t>();
      } else if (v->is_number_float() &&
                 std::floor(v->get<double>()) == v->get<double>() &&
                 std::abs(v->get<double>()) < 9e15) {
        r = static_cast<std::int64_t>(v->get<double>());
      } else {
        Bad(Key(k), "expected an integer");
      }
    }
    out[k] = r;
    return r;
  }

  std::uint64_t Seed(const std::string& k, std::uint64_t def) {
    const json* v = Find(k);
    std::uint64_t r = def;
    if (v) {
      if (v->is_number_unsigned()) {
        r = v->get<std::uint64_t>();
      } else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) {
        r = static_cast<std::uint64_t>(v->get<std::int64_t>());
      } else {
        Bad(Key(k), "expected a nonnegative integer");
      }
    }
    out[k] = r;
    return r;
  }

  bool Bool(const std::string& k, bool def) {
    const json* v = Find(k);
    bool r = def;
    if (v) {
      if (!v->is_boolean()) Bad(Key(k), "expected true or false");
      r = v->get<bool>();
    }
    out[k] = r;
    return r;
  }

  std::string String(const std::string& k, const std::string& def) {
    const json* v = Find(k);
    std::string r = def;
    if (v) {
      if (!v->is_string()) Bad(Key(k), "expected a string");
      r = v->get<std::string>();
    }
    out[k] = r;
    return r;
  }

  std::optional<Vec> OptVector(const std::string& k) {
    const json* v = Find(k);
    if (!v) {
      out[k] = nullptr;
      return std::nullopt;
    }
    Vec r = ToVector(*v, Key(k));
    out[k] = *v;
    return r;
  }

  Vec Vector(const std::string& k, const Vec& def) {
    auto v = OptVector(k);
    if (!v) {
      out[k] = std::vector<double>(def.data(), def.data() + def.size());
      return def;
    }
    return *v;
  }

  Mat Matrix(const std::string& k, const Mat& def) {
    const json* v = Find(k);
    if (!v) {
      json rows = json::array();
      for (Eigen::Index i = 0; i < def.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < def.cols(); ++c) row.push_back(def(i, c));
        rows.push_back(row);
      }
      out[k] = rows;
      return def;
    }
    if (!v->is_array()) Bad(Key(k), "expected an array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(v->size());
    Eigen::Index cols = -1;
    Mat m;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Vec row = ToVector((*v)[i], Key(k));
      if (cols < 0) {
        cols = row.size();
        m.resize(rows, cols);
      } else if (row.size() != cols) {
        Bad(Key(k), "rows differ in length");
      }
      m.row(i) = row.transpose();
    }
    if (rows == 0) m.resize(0, 0);
    out[k] = *v;
    return m;
  }

  const json* Sub(const std::string& k) { return Find(k); }

  void Finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (seen_.count(it.key())) continue;
      const std::string msg = "unknown key '" + Key(it.key()) + "'";
      if (strict_) throw Error(ErrorCode::kUnknownKey, msg);
      warnings_->push_back(msg + " ignored");
    }
  }

  json out = json::object();

 private:
  static Vec ToVector(const json& v, const std::string& key) {
    if (!v.is_array()) Bad(key, "expected an array of numbers");
    Vec r(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) Bad(key, "expected an array of numbers");
      r[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return r;
  }

  const json& j_;
  std::string scope_;
  bool strict_;
  std::vector<std::string>* warnings_;
  std::set<std::string> seen_;
};

json Presets(const std::string& name) {
  auto game = [](double eta, double alpha, double b, json params) {
    return json{{"problem", "regression_game"},
                {"problem_params", std::move(params)},
                {"solver", "ieg"},
                {"eta", eta},
                {"alpha", alpha},
                {"b", b},
                {"schedule", "regression"},
                {"batch", 1},
                {"T", 300},
                {"metrics", {"residual", "lower_subopt", "dist"}}};
  };
  if (name == "table1-synthetic") {
    return game(1e-2, 9e-1, 12e-1,
                {{"source", "synthetic"},
                 {"players", 10},
                 {"points", 250},
                 {"features", 25},
                 {"sigma", 1e-2}});
  }
  if (name == "table1-triazines") {
    return game(5e-2, 1e-1, 1e-1,
                {{"source", "dataset"}, {"players", 6}, {"sigma", 1e0}});
  }
  if (name == "table1-eunite2001") {
    return game(3e-1, 5e-1, 5e-1,
                {{"source", "dataset"}, {"players", 4}, {"sigma", 1e-1}});
  }
  Bad("preset", "unknown preset '" + name +
                    "' (table1-synthetic, table1-triazines, table1-eunite2001)");
}

json NormalizeTranslatedBox(Reader& r) {
  const TranslatedBoxSpec d;
  const int n = static_cast<int>(r.Int("n", d.n));
  if (n < 1) Bad(r.Key("n"), "must be >= 1");
  r.Double("shift_slope", d.shift_slope);
  r.Seed("seed", d.seed);
  r.Double("mu", d.mu);
  r.Double("ratio", d.ratio);
  r.Double("offset_scale", d.offset_scale);
  r.Double("noise_level", d.noise_level);
  r.Double("margin", d.margin);
  r.Matrix("matrix", Mat(0, 0));
  r.OptVector("offset");
  r.OptVector("box_lo");
  r.OptVector("box_hi");
  return r.out;
}

json NormalizeRegressionGame(Reader& r, const std::filesystem::path& base) {
  const SyntheticGameSpec s;
  const RegressionGameOptions o;
  const std::string source = r.String("source", "synthetic");
  if (source != "synthetic" && source != "dataset") {
    Bad(r.Key("source"), "expected 'synthetic' or 'dataset'");
  }
  if (r.Int("players", s.players) < 1) Bad(r.Key("players"), "must be >= 1");
  r.Int("points", s.points);
  r.Int("features", s.features);
  r.Seed("data_seed", s.seed);
  r.Int("overlap", s.overlap);
  r.Double("feature_scale", s.feature_scale);
  r.Double("coupling_scale", s.coupling_scale);
  r.Double("data_noise", s.noise);
  r.Double("train_fraction", s.train_fraction);
  std::string path = r.String("path", "");
  if (source == "dataset") {
    if (path.empty()) Bad(r.Key("path"), "required for a dataset source");
    std::filesystem::path p(path);
    if (p.is_relative() && !base.empty()) p = base / p;
    r.out["path"] = p.lexically_normal().string();
  }
  if (!(r.Double("lambda", o.lambda) > 0.0)) Bad(r.Key("lambda"), "must be > 0");
  if (!(r.Double("sigma", o.sigma) > 0.0)) Bad(r.Key("sigma"), "must be > 0");
  r.Double("noise_level", o.noise_level);
  r.Seed("seed", o.seed);
  r.Int("audit_triples", o.audit_triples);
  r.Double("gamma_safety", o.gamma_safety);
  r.OptDouble("gamma");
  return r.out;
}

json NormalizeCoupledSp(Reader& r) {
  const CoupledSpSpec d;
  const Mat one = Mat::Ones(1, 1);
  r.Matrix("P", one);
  r.Matrix("B", one);
  r.Matrix("Q", one);
  r.Vector("p", Vec::Zero(1));
  r.Vector("q", Vec::Zero(1));
  r.Matrix("C_u", one);
  r.Matrix("C_w", one);
  r.Vector("d", Vec::Constant(1, -0.5));
  r.Vector("u_lo", Vec::Constant(1, -2.0));
  r.Vector("u_hi", Vec::Constant(1, 0.25));
  r.Vector("w_lo", Vec::Constant(1, -2.0));
  r.Vector("w_hi", Vec::Constant(1, 0.25));
  r.Double("noise_level", d.noise_level);
  r.Seed("seed", d.seed);
  r.Int("audit_triples", d.audit_triples);
  r.Int("audit_budget", d.audit_budget);
  r.Double("gamma_safety", d.gamma_safety);
  r.OptDouble("gamma");
  return r.out;
}

RunConfig ParseJson(const json& input, bool strict,
                    const std::filesystem::path& base) {
  RunConfig c;
  json merged = input;
  if (const auto it = input.find("preset");
      it != input.end() && !it->is_null()) {
    if (!it->is_string()) Bad("preset", "expected a string");
    json preset = Presets(it->get<std::string>());
    preset.merge_patch(input);
    merged = std::move(preset);
    c.preset = it->get<std::string>();
    c.bypass_validation = true;
    c.warnings.push_back("preset '" + *c.preset +
                         "' bypasses step-size and schedule validation");
  }

  Reader r(merged, "", strict, &c.warnings);
  r.Find("preset");
  c.problem = r.String("problem", "translated_box");

  json params = json::object();
  if (const json* p = r.Sub("problem_params")) params = *p;
  Reader pr(params, "problem_params", strict, &c.warnings);
  if (c.problem == "translated_box") {
    c.problem_params = NormalizeTranslatedBox(pr);
  } else if (c.problem == "regression_game") {
    c.problem_params = NormalizeRegressionGame(pr, base);
  } else if (c.problem == "coupled_sp") {
    c.problem_params = NormalizeCoupledSp(pr);
  } else {
    Bad("problem", "unknown problem '" + c.problem +
                       "' (translated_box, regression_game, coupled_sp)");
  }
  pr.Finish();

  SolverConfig& s = c.solver;
  try {
    s.method = ParseMethod(r.String("solver", "ieg"));
  } catch (const Error&) {
    Bad("solver", "expected 'ieg' or 'ig'");
  }
  s.eta = r.Double("eta", s.eta);
  if (!(s.eta > 0.0)) Bad("eta", "must be > 0");
  s.alpha = r.Double("alpha", s.alpha);
  if (!(s.alpha > 0.0 && s.alpha <= 1.0)) Bad("alpha", "must lie in (0, 1]");
  s.b = r.Double("b", s.b);
  if (!(s.b >= 0.0)) Bad("b", "must be >= 0");
  try {
    s.schedule.kind = ParseScheduleKind(r.String("schedule", "deterministic"));
  } catch (const Error&) {
    Bad("schedule",
        "expected 'increasing', 'constant', 'deterministic' or 'regression'");
  }
  s.schedule.rho = r.Double("rho", s.schedule.rho);
  if (!(s.schedule.rho > 0.0 && s.schedule.rho < 1.0)) {
    Bad("rho", "must lie in (0, 1)");
  }
  s.schedule.batch = r.Int("batch", s.schedule.batch);
  if (s.schedule.batch < 1) Bad("batch", "must be >= 1");
  const std::int64_t t = r.Int("T", s.max_outer);
  if (t < 1 || t > 100000000) Bad("T", "must lie in [1, 1e8]");
  s.max_outer = static_cast<int>(t);
  s.seed = r.Seed("seed", s.seed);
  try {
    s.inner_method = ParseInnerMethod(r.String("inner_method", "auto"));
  } catch (const Error&) {
    Bad("inner_method", "expected auto, closed_form, fista or primal_dual");
  }
  if (const json* m = r.Sub("metrics")) {
    if (!m->is_array() || m->empty()) Bad("metrics", "expected a nonempty array");
    s.metrics.clear();
    for (const json& name : *m) {
      if (!name.is_string()) Bad("metrics", "expected metric names");
      try {
        s.metrics.push_back(ParseMetric(name.get<std::string>()));
      } catch (const Error&) {
        Bad("metrics", "unknown metric '" + name.get<std::string>() +
                           "' (dist, residual, lower_subopt)");
      }
    }
  }
  {
    json names = json::array();
    for (Metric m : s.metrics) names.push_back(MetricName(m));
    r.out["metrics"] = names;
  }
  s.metric_floor = r.Double("metric_floor", 0.0);
  if (s.metric_floor < 0.0) Bad("metric_floor", "must be >= 0");
  try {
    s.floor_metric = ParseMetric(r.String("floor_metric", "dist"));
  } catch (const Error&) {
    Bad("floor_metric", "unknown metric");
  }
  s.record_wall_time = r.Bool("record_wall_time", false);
  c.bypass_validation = r.Bool("bypass_validation", c.bypass_validation);
  if (c.bypass_validation && !c.preset) {
    c.warnings.push_back("bypass_validation: step-size and schedule checks are warnings only");
  }
  s.x0 = r.OptVector("x0");

  c.replicates = static_cast<int>(r.Int("replicates", 1));
  if (c.replicates < 1) Bad("replicates", "must be >= 1");
  c.threads = static_cast<int>(r.Int("threads", 1));
  if (c.threads < 1) Bad("threads", "must be >= 1");
  c.out_dir = r.String("out_dir", "out");
  if (const json* e = r.Sub("epsilons")) {
    if (!e->is_array()) Bad("epsilons", "expected an array of numbers");
    c.epsilons.clear();
    for (const json& v : *e) {
      if (!v.is_number() || !(v.get<double>() > 0.0)) {
        Bad("epsilons", "expected positive numbers");
      }
      c.epsilons.push_back(v.get<double>());
    }
  }
  c.fit_lo = static_cast<int>(r.Int("fit_lo", 0));
  c.fit_hi = static_cast<int>(r.Int("fit_hi", -1));
  if (c.fit_lo < 0) Bad("fit_lo", "must be >= 0");
  r.Finish();
  return c;
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string Cell(const std::optional<double>& v) { return v ? Num(*v) : ""; }

constexpr const char* kHeader =
    "k,N_k,t_k,cum_samples,cum_inner,dist,residual,lower_subopt,wall_ms\n";

// Averages metric columns over traces, row by row, for the common prefix.
IterationTrace MeanTrace(const std::vector<IterationTrace>& traces) {
  IterationTrace mean;
  if (traces.empty()) return mean;
  std::size_t rows = traces[0].rows.size();
  for (const auto& t : traces) rows = std::min(rows, t.rows.size());
  const double inv = 1.0 / static_cast<double>(traces.size());
  auto average = [&](auto get) -> std::optional<double> {
    double s = 0.0;
    for (const auto& t : traces) {
      const std::optional<double> v = get(t);
      if (!v) return std::nullopt;
      s += *v;
    }
    return s * inv;
  };
  auto average_row = [&](auto pick) {
    TraceRow out = pick(traces[0]);
    for (Metric m : {Metric::kDist, Metric::kResidual, Metric::kLowerSubopt}) {
      const auto v = average(
          [&](const IterationTrace& t) { return pick(t).Get(m); });
      if (m == Metric::kDist) out.dist = v;
      if (m == Metric::kResidual) out.residual = v;
      if (m == Metric::kLowerSubopt) out.lower_subopt = v;
    }
    out.wall_ms = average([&](const IterationTrace& t) { return pick(t).wall_ms; });
    return out;
  };
  for (std::size_t i = 0; i < rows; ++i) {
    mean.rows.push_back(
        average_row([i](const IterationTrace& t) { return t.rows[i]; }));
  }
  bool same_length = true;
  for (const auto& t : traces) same_length = same_length && t.iterations == traces[0].iterations;
  if (same_length) {
    mean.final_row =
        average_row([](const IterationTrace& t) { return t.final_row; });
  } else if (!mean.rows.empty()) {
    mean.final_row = mean.rows.back();
  }
  mean.iterations = static_cast<int>(rows);
  mean.derived = traces[0].derived;
  return mean;
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw Error(ErrorCode::kIoError, "write failed for '" + path.string() + "'");
}

json RowJson(const TraceRow& row) {
  json j = {{"k", row.k}};
  for (Metric m : {Metric::kDist, Metric::kResidual, Metric::kLowerSubopt}) {
    const auto v = row.Get(m);
    j[MetricName(m)] = v ? json(*v) : json(nullptr);
  }
  return j;
}

json DerivedJson(const DerivedParameters& d) {
  json j = {{"beta", d.beta}, {"q", d.q}, {"warnings", d.warnings}};
  j["eta_interval"] = d.interval ? json{d.interval->lo, d.interval->hi}
                                 : json(nullptr);
  return j;
}

json Summarize(const RunConfig& config, const std::vector<IterationTrace>& traces,
               const DerivedParameters& derived) {
  const IterationTrace mean = MeanTrace(traces);
  json s;
  s["replicates"] = traces.size();
  json status = json::array();
  for (const auto& t : traces) {
    status.push_back({{"status", RunStatusName(t.status)},
                      {"iterations", t.iterations},
                      {"message", t.message}});
  }
  s["runs"] = status;
  s["final"] = RowJson(mean.final_row);
  s["derived"] = DerivedJson(derived);
  json rates = json::object();
  json complexity = json::object();
  const int last = static_cast<int>(mean.rows.size()) - 1;
  const int hi = config.fit_hi < 0 ? last : std::min(config.fit_hi, last);
  for (Metric m : config.solver.metrics) {
    const std::string name = MetricName(m);
    try {
      const RateFit f = FitLinearRate(mean, m, config.fit_lo, hi);
      rates[name] = {{"slope_log10", f.slope},
                     {"factor", std::pow(10.0, f.slope)},
                     {"r2", f.r2},
                     {"samples", f.samples},
                     {"k_lo", config.fit_lo},
                     {"k_hi", hi}};
    } catch (const Error& e) {
      rates[name] = {{"error", e.what()}};
    }
    json per = json::array();
    for (double eps : config.epsilons) {
      try {
        const ComplexityReport r = OracleComplexityReport(mean, m, eps);
        per.push_back({{"epsilon", eps},
                       {"reached", true},
                       {"k", r.k},
                       {"samples", r.samples},
                       {"inner", r.inner}});
      } catch (const Error&) {
        per.push_back({{"epsilon", eps}, {"reached", false}});
      }
    }
    complexity[name] = per;
  }
  s["rates"] = rates;
  s["complexity"] = complexity;
  return s;
}

}  // namespace

RunConfig ParseConfig(const std::string& text, bool strict) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) Bad("<root>", "expected an object");
  if (j.contains("sqvi_manifest")) {
    if (!j.contains("config")) Bad("config", "manifest without a config");
    return ParseJson(j.at("config"), strict, {});
  }
  return ParseJson(j, strict, {});
}

RunConfig ParseConfigFile(const std::string& path, bool strict) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) Bad("<root>", "expected an object");
  const std::filesystem::path base =
      std::filesystem::absolute(std::filesystem::path(path)).parent_path();
  if (j.contains("sqvi_manifest")) {
    if (!j.contains("config")) Bad("config", "manifest without a config");
    return ParseJson(j.at("config"), strict, base);
  }
  return ParseJson(j, strict, base);
}

json ConfigToJson(const RunConfig& c) {
  const SolverConfig& s = c.solver;
  json metrics = json::array();
  for (Metric m : s.metrics) metrics.push_back(MetricName(m));
  json j = {{"problem", c.problem},
            {"problem_params", c.problem_params},
            {"solver", MethodName(s.method)},
            {"eta", s.eta},
            {"alpha", s.alpha},
            {"b", s.b},
            {"schedule", ScheduleKindName(s.schedule.kind)},
            {"rho", s.schedule.rho},
            {"batch", s.schedule.batch},
            {"T", s.max_outer},
            {"seed", s.seed},
            {"inner_method", InnerMethodName(s.inner_method)},
            {"metrics", metrics},
            {"metric_floor", s.metric_floor},
            {"floor_metric", MetricName(s.floor_metric)},
            {"record_wall_time", s.record_wall_time},
            {"bypass_validation", c.bypass_validation},
            {"replicates", c.replicates},
            {"threads", c.threads},
            {"out_dir", c.out_dir},
            {"epsilons", c.epsilons},
            {"fit_lo", c.fit_lo},
            {"fit_hi", c.fit_hi}};
  j["preset"] = c.preset ? json(*c.preset) : json(nullptr);
  j["x0"] = s.x0 ? json(std::vector<double>(s.x0->data(),
                                            s.x0->data() + s.x0->size()))
                 : json(nullptr);
  return j;
}

ProblemInstance BuildProblem(const RunConfig& config) {
  // Normalized params are complete; reuse the reader for typed access.
  std::vector<std::string> ignored;
  Reader r(config.problem_params, "problem_params", false, &ignored);
  if (config.problem == "translated_box") {
    TranslatedBoxSpec s;
    s.n = static_cast<int>(r.Int("n", s.n));
    s.shift_slope = r.Double("shift_slope", s.shift_slope);
    s.seed = r.Seed("seed", s.seed);
    s.mu = r.Double("mu", s.mu);
    s.ratio = r.Double("ratio", s.ratio);
    s.offset_scale = r.Double("offset_scale", s.offset_scale);
    s.noise_level = r.Double("noise_level", s.noise_level);
    s.margin = r.Double("margin", s.margin);
    const Mat m = r.Matrix("matrix", Mat(0, 0));
    if (m.size() > 0) s.matrix = m;
    s.offset = r.OptVector("offset");
    s.box_lo = r.OptVector("box_lo");
    s.box_hi = r.OptVector("box_hi");
    return MakeTranslatedBoxQvi(s);
  }
  if (config.problem == "regression_game") {
    const std::string source = r.String("source", "synthetic");
    const int players = static_cast<int>(r.Int("players", 10));
    const int overlap = static_cast<int>(r.Int("overlap", 2));
    const double train_fraction = r.Double("train_fraction", 0.8);
    const double coupling = r.Double("coupling_scale", 0.05);
    RegressionGameData data;
    if (source == "dataset") {
      const LibsvmData raw = LoadLibsvm(r.String("path", ""));
      data = MakeDatasetGameData(raw.features, raw.targets, players, overlap,
                                 train_fraction, coupling);
    } else {
      SyntheticGameSpec s;
      s.players = players;
      s.points = static_cast<int>(r.Int("points", s.points));
      s.features = static_cast<int>(r.Int("features", s.features));
      s.seed = r.Seed("data_seed", s.seed);
      s.overlap = overlap;
      s.feature_scale = r.Double("feature_scale", s.feature_scale);
      s.coupling_scale = coupling;
      s.noise = r.Double("data_noise", s.noise);
      s.train_fraction = train_fraction;
      data = MakeSyntheticGameData(s);
    }
    RegressionGameOptions o;
    o.lambda = r.Double("lambda", o.lambda);
    o.sigma = r.Double("sigma", o.sigma);
    o.noise_level = r.Double("noise_level", o.noise_level);
    o.seed = r.Seed("seed", o.seed);
    o.audit_triples = static_cast<int>(r.Int("audit_triples", o.audit_triples));
    o.gamma_safety = r.Double("gamma_safety", o.gamma_safety);
    o.gamma = r.OptDouble("gamma");
    return MakeRegressionGame(data, o);
  }
  if (config.problem == "coupled_sp") {
    CoupledSpSpec s;
    const Mat one = Mat::Ones(1, 1);
    s.p = r.Matrix("P", one);
    s.b = r.Matrix("B", one);
    s.q = r.Matrix("Q", one);
    s.p_lin = r.Vector("p", Vec::Zero(1));
    s.q_lin = r.Vector("q", Vec::Zero(1));
    s.coupling_u = r.Matrix("C_u", one);
    s.coupling_w = r.Matrix("C_w", one);
    s.coupling_rhs = r.Vector("d", Vec::Constant(1, -0.5));
    if (s.coupling_u.size() == 0) s.coupling_u = Mat(0, s.p.rows());
    if (s.coupling_w.size() == 0) s.coupling_w = Mat(0, s.q.rows());
    s.u_lo = r.Vector("u_lo", Vec::Constant(1, -2.0));
    s.u_hi = r.Vector("u_hi", Vec::Constant(1, 0.25));
    s.w_lo = r.Vector("w_lo", Vec::Constant(1, -2.0));
    s.w_hi = r.Vector("w_hi", Vec::Constant(1, 0.25));
    s.noise_level = r.Double("noise_level", s.noise_level);
    s.seed = r.Seed("seed", s.seed);
    s.audit_triples = static_cast<int>(r.Int("audit_triples", s.audit_triples));
    s.audit_budget = r.Int("audit_budget", s.audit_budget);
    s.gamma_safety = r.Double("gamma_safety", s.gamma_safety);
    s.gamma = r.OptDouble("gamma");
    return MakeCoupledSp(s);
  }
  Bad("problem", "unknown problem '" + config.problem + "'");
}

DerivedParameters ValidateRun(const RunConfig& config,
                              const ProblemInstance& problem) {
  if (config.solver.x0) {
    if (config.solver.x0->size() != problem.dim()) {
      Bad("x0", "has dimension " + std::to_string(config.solver.x0->size()) +
                    ", problem has " + std::to_string(problem.dim()));
    }
  }
  for (Metric m : config.solver.metrics) {
    if (m == Metric::kLowerSubopt && !problem.lower_subopt) {
      Bad("metrics", "lower_subopt needs a bilevel problem");
    }
  }
  try {
    return DeriveParameters(config.solver, problem.lipschitz, problem.qg_mu,
                            problem.gamma, !config.bypass_validation);
  } catch (const Error& e) {
    Bad(e.code() == ErrorCode::kInvalidSchedule ? "rho" : "eta", e.what());
  }
}

std::uint64_t ReplicateSeed(std::uint64_t seed, int replicate) {
  if (replicate == 0) return seed;
  return StreamId{seed}.Child({0x7265706cULL, std::uint64_t(replicate)}).seed;
}

std::string TraceCsv(const IterationTrace& trace) {
  std::string out = kHeader;
  for (const TraceRow& r : trace.rows) {
    out += std::to_string(r.k) + "," + std::to_string(r.batch) + "," +
           std::to_string(r.inner) + "," + std::to_string(r.cum_samples) + "," +
           std::to_string(r.cum_inner) + "," + Cell(r.dist) + "," +
           Cell(r.residual) + "," + Cell(r.lower_subopt) + "," +
           Cell(r.wall_ms) + "\n";
  }
  return out;
}

std::string MeanCsv(const std::vector<IterationTrace>& traces) {
  return TraceCsv(MeanTrace(traces));
}

ExperimentResult RunExperiment(const RunConfig& config,
                               const std::filesystem::path& out_dir) {
  ExperimentResult result;
  const ProblemInstance problem = BuildProblem(config);
  result.derived = ValidateRun(config, problem);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create '" + out_dir.string() + "': " + ec.message());
  }

  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < config.replicates; ++r) {
    seeds.push_back(ReplicateSeed(config.solver.seed, r));
  }
  auto run_one = [&](int r) {
    SolverConfig s = config.solver;
    s.seed = seeds[r];
    return RunSolver(problem, s, false);
  };
  auto write_trace = [&](int r, const IterationTrace& t) {
    const auto path = out_dir / ("trace_" + std::to_string(r) + ".csv");
    WriteFile(path, TraceCsv(t));
    result.files.push_back(path);
  };

  result.traces.resize(config.replicates);
  if (config.threads <= 1) {
    for (int r = 0; r < config.replicates; ++r) {
      result.traces[r] = run_one(r);
      write_trace(r, result.traces[r]);
    }
  } else {
    for (int start = 0; start < config.replicates; start += config.threads) {
      const int stop = std::min(config.replicates, start + config.threads);
      std::vector<std::future<IterationTrace>> jobs;
      for (int r = start; r < stop; ++r) {
        jobs.push_back(std::async(std::launch::async, run_one, r));
      }
      for (int r = start; r < stop; ++r) {
        result.traces[r] = jobs[r - start].get();
        write_trace(r, result.traces[r]);
      }
    }
  }

  const auto mean_path = out_dir / "mean.csv";
  WriteFile(mean_path, MeanCsv(result.traces));
  result.files.push_back(mean_path);

  std::vector<std::string> warnings = config.warnings;
  warnings.insert(warnings.end(), result.derived.warnings.begin(),
                  result.derived.warnings.end());
  json files = json::array();
  for (const auto& f : result.files) files.push_back(f.filename().string());
  files.push_back("summary.json");
  result.manifest = {{"sqvi_manifest", 1},
                     {"library_version", kLibraryVersion},
                     {"config", ConfigToJson(config)},
                     {"problem", problem.metadata},
                     {"constants",
                      {{"L", problem.lipschitz},
                       {"mu_F", problem.qg_mu},
                       {"gamma", problem.gamma},
                       {"nu", problem.noise_level},
                       {"dim", problem.dim()}}},
                     {"derived", DerivedJson(result.derived)},
                     {"replicate_seeds", seeds},
                     {"warnings", warnings},
                     {"files", files}};
  const auto manifest_path = out_dir / "manifest.json";
  WriteFile(manifest_path, result.manifest.dump(2) + "\n");
  result.files.push_back(manifest_path);

  result.summary = Summarize(config, result.traces, result.derived);
  const auto summary_path = out_dir / "summary.json";
  WriteFile(summary_path, result.summary.dump(2) + "\n");
  result.files.push_back(summary_path);
  return result;
}

}  // namespace sqvi
