#include "rflnn/experiment.hpp"

#include <cstdlib>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "rflnn/parallel.hpp"
#include "rflnn/serialization.hpp"

namespace rflnn {

using nlohmann::json;

namespace {

const char* const kSchema = R"json({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "rflnn experiment config",
  "type": "object",
  "additionalProperties": false,
  "required": ["experiment"],
  "properties": {
    "experiment": {"enum": ["fp-sinc", "fp-dataset", "freq-guided-compare", "poisson-bench"]},
    "seeds": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
    "output_dir": {"type": "string"},
    "jobs": {"type": "integer", "minimum": 1},
    "dataset": {"$ref": "#/$defs/dataset"},
    "models": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "elm": {"$ref": "#/$defs/elm"},
        "bls": {"$ref": "#/$defs/bls"},
        "stacked_bls": {"$ref": "#/$defs/bls"}
      }
    },
    "model": {"$ref": "#/$defs/bls"},
    "grid": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "rho": {"type": "number", "exclusiveMinimum": 0},
        "alphas": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "integer"}}
      }
    },
    "peaks": {"type": "integer", "minimum": 1},
    "threshold": {"type": "number", "exclusiveMinimum": 0},
    "input_range": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}},
    "compare": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "runs": {"type": "integer", "minimum": 2},
        "growth_steps": {"type": "integer", "minimum": 0},
        "metric": {"enum": ["accuracy", "rmse"]},
        "fixed_schedule": {"$ref": "#/$defs/schedule"},
        "guided_schedule": {"$ref": "#/$defs/schedule"}
      }
    },
    "poisson": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "problem": {"enum": ["1d", "2d"]},
        "n": {"type": "integer", "minimum": 2},
        "tols": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 0}},
        "methods": {"type": "array", "minItems": 1, "items": {"enum": ["jacobi", "bls_jacobi"]}},
        "repetitions": {"type": "integer", "minimum": 1},
        "rule": {"enum": ["residual", "error"]},
        "growth_steps": {"type": "integer", "minimum": 0},
        "coordinates": {"enum": ["unit", "symmetric"]},
        "max_iters": {"type": "integer", "minimum": 1},
        "timing": {"type": "boolean"}
      }
    }
  },
  "$defs": {
    "activation": {"enum": ["identity", "linear", "tanh", "sigmoid"]},
    "schedule": {
      "type": "object",
      "additionalProperties": false,
      "required": ["kind", "base"],
      "properties": {
        "kind": {"enum": ["constant", "geometric", "linear"]},
        "base": {"type": "number", "exclusiveMinimum": 0},
        "rate": {"type": "number"},
        "cap": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "elm": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "nodes_per_step": {"type": "integer", "minimum": 1},
        "interval": {"type": "number", "exclusiveMinimum": 0},
        "lambda": {"type": "number", "minimum": 0},
        "activation": {"$ref": "#/$defs/activation"},
        "steps": {"type": "integer", "minimum": 1}
      }
    },
    "bls": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "feature_groups": {"type": "integer", "minimum": 1},
        "feature_nodes": {"type": "integer", "minimum": 1},
        "enhancement_groups": {"type": "integer", "minimum": 0},
        "enhancement_nodes": {"type": "integer", "minimum": 1},
        "feature_activation": {"$ref": "#/$defs/activation"},
        "enhancement_activation": {"$ref": "#/$defs/activation"},
        "lambda": {"type": "number", "minimum": 0},
        "feature_interval": {"type": "number", "exclusiveMinimum": 0},
        "schedule": {"$ref": "#/$defs/schedule"},
        "pinv_rtol": {"type": "number", "exclusiveMinimum": 0},
        "dependence_tol": {"type": "number", "exclusiveMinimum": 0},
        "norm_u": {"enum": [2]},
        "norm_v": {"enum": [2]},
        "steps": {"type": "integer", "minimum": 1},
        "blocks": {"type": "integer", "minimum": 1},
        "input": {"enum": ["previous_output", "raw_input"]}
      }
    },
    "dataset": {
      "type": "object",
      "additionalProperties": false,
      "required": ["kind"],
      "properties": {
        "kind": {"enum": ["idx_pair", "csv", "synthetic_sinc", "synthetic_sine_mix"]},
        "images": {"type": "string"},
        "labels": {"type": "string"},
        "path": {"type": "string"},
        "label_column": {"type": "string"},
        "label_kind": {"enum": ["categorical", "numeric"]},
        "samples": {"type": "integer", "minimum": 2},
        "domain": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "number"}},
        "frequencies": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        "limit": {"type": "integer", "minimum": 0},
        "split": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "split_seed": {"type": "integer", "minimum": 0},
        "normalization": {"enum": ["none", "minmax", "zscore"]}
      }
    }
  }
})json";

// ---- schema subset validator ------------------------------------------------

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError((path.empty() ? std::string("config") : path) + ": " + msg);
}

std::string child(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string type_name(const json& v) {
    if (v.is_number_integer()) return "integer";
    if (v.is_number()) return "number";
    return v.type_name();
}

void check(const json& schema, const json& root, const json& v, const std::string& path) {
    if (schema.contains("$ref")) {
        const auto ref = schema["$ref"].get<std::string>();
        const std::string prefix = "#/$defs/";
        check(root.at("$defs").at(ref.substr(prefix.size())), root, v, path);
        return;
    }
    if (schema.contains("enum")) {
        for (const auto& e : schema["enum"])
            if (e == v) return;
        fail(path, "must be one of " + schema["enum"].dump() + " (got " + v.dump() + ")");
    }
    if (schema.contains("type")) {
        const auto t = schema["type"].get<std::string>();
        const bool ok = (t == "object" && v.is_object()) || (t == "array" && v.is_array()) ||
                        (t == "string" && v.is_string()) || (t == "boolean" && v.is_boolean()) ||
                        (t == "integer" && v.is_number_integer()) ||
                        (t == "number" && v.is_number());
        if (!ok) fail(path, "expected " + t + ", got " + type_name(v));
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (schema.contains("minimum") && x < schema["minimum"].get<double>())
            fail(path, "must be >= " + schema["minimum"].dump() + " (got " + v.dump() + ")");
        if (schema.contains("exclusiveMinimum") && !(x > schema["exclusiveMinimum"].get<double>()))
            fail(path, "must be > " + schema["exclusiveMinimum"].dump() + " (got " + v.dump() + ")");
        if (schema.contains("maximum") && x > schema["maximum"].get<double>())
            fail(path, "must be <= " + schema["maximum"].dump() + " (got " + v.dump() + ")");
    }
    if (v.is_array()) {
        if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
            fail(path, "needs at least " + schema["minItems"].dump() + " items");
        if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>())
            fail(path, "allows at most " + schema["maxItems"].dump() + " items");
        if (schema.contains("items"))
            for (std::size_t i = 0; i < v.size(); ++i)
                check(schema["items"], root, v[i], path + "[" + std::to_string(i) + "]");
    }
    if (v.is_object()) {
        const json props = schema.value("properties", json::object());
        if (schema.contains("required"))
            for (const auto& r : schema["required"])
                if (!v.contains(r.get<std::string>())) fail(child(path, r.get<std::string>()), "is required");
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (props.contains(it.key()))
                check(props[it.key()], root, it.value(), child(path, it.key()));
            else if (schema.value("additionalProperties", true) == false)
                fail(child(path, it.key()), "unknown key");
        }
    }
}

// ---- typed extraction ---------------------------------------------------------

template <typename F>
auto at_path(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(path, 0) == 0) throw;
        throw ConfigError(path + ": " + msg);
    }
}

IntervalSchedule build_schedule(const json& j, const std::string& path) {
    return at_path(path, [&] {
        const auto kind = parse_schedule_kind(j.at("kind").get<std::string>());
        const double base = j.at("base").get<double>();
        if (kind == IntervalSchedule::Kind::constant) return IntervalSchedule::constant(base);
        if (!j.contains("rate")) fail(child(path, "rate"), "is required for a growing schedule");
        if (!j.contains("cap")) fail(child(path, "cap"), "is required for a growing schedule");
        const double rate = j["rate"].get<double>();
        const double cap = j["cap"].get<double>();
        return kind == IntervalSchedule::Kind::geometric ? IntervalSchedule::geometric(base, rate, cap)
                                                         : IntervalSchedule::linear(base, rate, cap);
    });
}

BlsConfig build_bls(const json& j, const std::string& path, BlsConfig c) {
    c.feature_groups = j.value("feature_groups", c.feature_groups);
    c.feature_nodes = j.value("feature_nodes", c.feature_nodes);
    c.enhancement_groups = j.value("enhancement_groups", c.enhancement_groups);
    c.enhancement_nodes = j.value("enhancement_nodes", c.enhancement_nodes);
    if (j.contains("feature_activation"))
        c.feature_activation = parse_activation(j["feature_activation"].get<std::string>());
    if (j.contains("enhancement_activation"))
        c.enhancement_activation = parse_activation(j["enhancement_activation"].get<std::string>());
    c.lambda = j.value("lambda", c.lambda);
    if (j.contains("feature_interval")) c.feature_interval = j["feature_interval"].get<double>();
    if (j.contains("schedule")) c.schedule = build_schedule(j["schedule"], child(path, "schedule"));
    c.pinv_rtol = j.value("pinv_rtol", c.pinv_rtol);
    c.dependence_tol = j.value("dependence_tol", c.dependence_tol);
    at_path(path, [&] { c.validate(); });
    return c;
}

DatasetSource build_dataset(const json& j, const std::string& path, DatasetSource d,
                            const std::filesystem::path& base_dir) {
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() || base_dir.empty() ? fp : base_dir / fp;
    };
    const auto kind = parse_source_kind(j.at("kind").get<std::string>());
    if (kind != d.kind) {
        DatasetSource fresh;
        fresh.kind = kind;
        if (kind == DatasetSource::Kind::synthetic_sine_mix) {
            fresh.samples = 400;
            fresh.lo = -kPi;
            fresh.hi = kPi;
        }
        d = fresh;
    }
    if (j.contains("images")) d.images = resolve(j["images"].get<std::string>());
    if (j.contains("labels")) d.labels = resolve(j["labels"].get<std::string>());
    if (j.contains("path")) d.csv = resolve(j["path"].get<std::string>());
    d.label_column = j.value("label_column", d.label_column);
    if (j.contains("label_kind"))
        d.label_kind = j["label_kind"] == "numeric" ? LabelKind::numeric : LabelKind::categorical;
    d.samples = j.value("samples", d.samples);
    if (j.contains("domain")) {
        d.lo = j["domain"][0].get<double>();
        d.hi = j["domain"][1].get<double>();
    }
    if (j.contains("frequencies")) d.frequencies = j["frequencies"].get<std::vector<double>>();
    d.limit = j.value("limit", d.limit);
    d.split = j.value("split", d.split);
    d.split_seed = j.value("split_seed", d.split_seed);
    if (j.contains("normalization")) d.normalization = parse_normalization(j["normalization"].get<std::string>());
    if ((kind == DatasetSource::Kind::synthetic_sinc || kind == DatasetSource::Kind::synthetic_sine_mix) &&
        !(d.hi > d.lo))
        fail(child(path, "domain"), "must satisfy lo < hi");
    if (kind == DatasetSource::Kind::idx_pair) {
        if (d.images.empty()) fail(child(path, "images"), "is required for idx_pair");
        if (d.labels.empty()) fail(child(path, "labels"), "is required for idx_pair");
        if (!std::filesystem::exists(d.images)) fail(child(path, "images"), "no such file " + d.images.string());
        if (!std::filesystem::exists(d.labels)) fail(child(path, "labels"), "no such file " + d.labels.string());
    }
    if (kind == DatasetSource::Kind::csv) {
        if (d.csv.empty()) fail(child(path, "path"), "is required for csv");
        if (!std::filesystem::exists(d.csv)) fail(child(path, "path"), "no such file " + d.csv.string());
    }
    at_path(path, [&] { d.validate(); });
    return d;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::uint64_t count) {
    std::vector<std::uint64_t> s;
    for (std::uint64_t i = 0; i < count; ++i) s.push_back(first + i);
    return s;
}

GrowthPlan default_plan(ModelFamily family) {
    GrowthPlan p;
    p.family = family;
    p.bls.feature_groups = 1;
    p.bls.feature_nodes = 2;
    p.bls.feature_activation = Activation::identity;
    p.bls.enhancement_groups = 1;
    p.bls.enhancement_activation = Activation::tanh;
    p.bls.lambda = 1e-8;
    switch (family) {
    case ModelFamily::elm: p.steps = 20; break;
    case ModelFamily::bls:
        p.steps = 20;
        p.bls.enhancement_nodes = 2;
        break;
    case ModelFamily::stacked_bls:
        p.steps = 5;
        p.bls.enhancement_nodes = 6;
        break;
    }
    return p;
}

BlsConfig default_compare_bls() {
    BlsConfig c;
    c.feature_groups = 1;
    c.feature_nodes = 5;
    c.feature_activation = Activation::identity;
    c.enhancement_groups = 1;
    c.enhancement_nodes = 10;
    c.enhancement_activation = Activation::tanh;
    // Growth runs on the pseudoinverse; a ridge start would leave its offset in every later step.
    c.lambda = 0.0;
    return c;
}

void build_fp(const json& j, ExperimentConfig& c) {
    const bool sinc = c.kind == ExperimentKind::fp_sinc;
    if (sinc) {
        c.dataset = DatasetSource{};
        c.dataset.kind = DatasetSource::Kind::synthetic_sinc;
        c.dataset.split = 1.0;
        c.fp.input_range = std::make_pair(-3.0, 3.0);
    }
    if (j.contains("input_range")) {
        const double lo = j["input_range"][0].get<double>(), hi = j["input_range"][1].get<double>();
        if (!(hi > lo)) fail("input_range", "must satisfy lo < hi");
        c.fp.input_range = std::make_pair(lo, hi);
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        int first = 0, last = 40;
        if (g.contains("alphas")) {
            first = g["alphas"][0].get<int>();
            last = g["alphas"][1].get<int>();
            if (last - first < 2) fail("grid.alphas", "needs at least three frequencies");
        }
        c.fp.options.grid = FrequencyGrid::range(first, last, g.value("rho", 2 * kPi));
    }
    c.fp.options.max_peaks = j.value("peaks", c.fp.options.max_peaks);
    c.fp.threshold = j.value("threshold", c.fp.threshold);

    const json models = j.value("models", json::object());
    const ModelFamily order[] = {ModelFamily::elm, ModelFamily::bls, ModelFamily::stacked_bls};
    for (ModelFamily f : order) {
        const std::string key(to_string(f));
        if (!models.empty() && !models.contains(key)) continue;
        GrowthPlan p = default_plan(f);
        const json m = models.value(key, json::object());
        const std::string path = "models." + key;
        if (f == ModelFamily::elm) {
            if (m.contains("blocks") || m.contains("input")) fail(path, "unexpected stacked-bls key");
            p.elm_nodes_per_step = m.value("nodes_per_step", p.elm_nodes_per_step);
            p.elm_interval = m.value("interval", p.elm_interval);
            p.elm_lambda = m.value("lambda", p.elm_lambda);
            if (m.contains("activation")) p.elm_activation = parse_activation(m["activation"].get<std::string>());
            p.steps = m.value("steps", p.steps);
        } else {
            p.bls = build_bls(m, path, p.bls);
            if (f == ModelFamily::bls) {
                if (m.contains("blocks")) fail(child(path, "blocks"), "only applies to stacked_bls");
                if (m.contains("input")) fail(child(path, "input"), "only applies to stacked_bls");
                p.steps = m.value("steps", p.steps);
            } else {
                if (m.contains("steps")) fail(child(path, "steps"), "use 'blocks' for stacked_bls");
                p.steps = m.value("blocks", p.steps);
                if (m.contains("input"))
                    p.stack_input = m["input"] == "raw_input" ? StackInput::raw_input : StackInput::previous_output;
            }
        }
        at_path(path, [&] { p.validate(); });
        c.fp.plans.push_back(p);
    }
    if (c.seeds.empty()) c.seeds = seed_range(1, 20);
}

void build_compare(const json& j, ExperimentConfig& c) {
    c.dataset = DatasetSource{};
    c.dataset.kind = DatasetSource::Kind::synthetic_sine_mix;
    c.dataset.samples = 400;
    c.dataset.lo = -kPi;
    c.dataset.hi = kPi;
    c.dataset.split = 0.8;
    c.bls = default_compare_bls();
    c.compare.metric = Metric::negative_rmse;
    if (j.contains("model")) {
        if (j["model"].contains("steps") || j["model"].contains("blocks") || j["model"].contains("input"))
            fail("model", "growth is configured under compare.growth_steps");
        c.bls = build_bls(j["model"], "model", c.bls);
    }
    if (j.contains("compare")) {
        const auto& k = j["compare"];
        c.compare.runs = k.value("runs", c.compare.runs);
        c.compare.growth_steps = k.value("growth_steps", c.compare.growth_steps);
        if (k.contains("metric"))
            c.compare.metric = k["metric"] == "accuracy" ? Metric::accuracy : Metric::negative_rmse;
        if (k.contains("fixed_schedule"))
            c.compare.fixed_schedule = build_schedule(k["fixed_schedule"], "compare.fixed_schedule");
        if (k.contains("guided_schedule"))
            c.compare.guided_schedule = build_schedule(k["guided_schedule"], "compare.guided_schedule");
    }
    if (!c.seeds.empty()) {
        if (j.contains("compare") && j["compare"].contains("runs") &&
            static_cast<std::size_t>(c.compare.runs) != c.seeds.size())
            fail("compare.runs", "disagrees with the number of seeds");
        c.compare.runs = static_cast<Index>(c.seeds.size());
        c.compare.seeds = c.seeds;
    } else {
        c.seeds = seed_range(1, static_cast<std::uint64_t>(c.compare.runs));
    }
}

void build_poisson(const json& j, ExperimentConfig& c) {
    const json p = j.value("poisson", json::object());
    c.poisson.dim = p.value("problem", std::string("1d")) == "2d" ? 2 : 1;
    c.poisson.n = p.value("n", c.poisson.dim == 1 ? Index{256} : Index{64});
    auto& b = c.poisson.bench;
    b.bls = c.poisson.dim == 1 ? default_poisson_bls_1d() : default_poisson_bls_2d();
    if (j.contains("model")) {
        if (j["model"].contains("steps") || j["model"].contains("blocks") || j["model"].contains("input"))
            fail("model", "growth is configured under poisson.growth_steps");
        b.bls.bls = build_bls(j["model"], "model", b.bls.bls);
        if (!(b.bls.bls.lambda > 0)) fail("model.lambda", "must be > 0 for the Poisson fit");
    }
    if (p.contains("tols")) b.tols = p["tols"].get<std::vector<double>>();
    if (p.contains("methods")) b.methods = p["methods"].get<std::vector<std::string>>();
    b.repetitions = p.value("repetitions", b.repetitions);
    if (p.contains("rule")) b.rule = parse_stop_rule(p["rule"].get<std::string>());
    b.growth_steps = p.value("growth_steps", default_growth_steps(c.poisson.dim));
    if (p.contains("coordinates"))
        b.bls.coordinates = p["coordinates"] == "unit" ? CoordinateRange::unit : CoordinateRange::symmetric;
    b.max_iters = p.value("max_iters", b.max_iters);
    b.record_timing = p.value("timing", true);
    if (c.seeds.empty()) c.seeds = seed_range(1, 5);
    b.seeds = c.seeds;
}

} // namespace

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::fp_sinc: return "fp-sinc";
    case ExperimentKind::fp_dataset: return "fp-dataset";
    case ExperimentKind::freq_guided_compare: return "freq-guided-compare";
    case ExperimentKind::poisson_bench: return "poisson-bench";
    }
    return "fp-sinc";
}

const std::string& config_schema() {
    static const std::string schema = json::parse(kSchema).dump(2);
    return schema;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: invalid JSON at byte " + std::to_string(e.byte));
    }
    static const json schema = json::parse(kSchema);
    check(schema, schema, j, "");

    ExperimentConfig c;
    const auto name = j["experiment"].get<std::string>();
    if (name == "fp-sinc") c.kind = ExperimentKind::fp_sinc;
    else if (name == "fp-dataset") c.kind = ExperimentKind::fp_dataset;
    else if (name == "freq-guided-compare") c.kind = ExperimentKind::freq_guided_compare;
    else c.kind = ExperimentKind::poisson_bench;

    auto forbid = [&](const char* key) {
        if (j.contains(key)) fail(key, "not used by experiment '" + name + "'");
    };
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("output_dir")) {
        std::filesystem::path out(j["output_dir"].get<std::string>());
        c.output_dir = out.is_absolute() || base_dir.empty() ? out : base_dir / out;
    }
    c.jobs = j.value("jobs", 1);

    switch (c.kind) {
    case ExperimentKind::fp_sinc:
    case ExperimentKind::fp_dataset:
        forbid("model");
        forbid("compare");
        forbid("poisson");
        if (c.kind == ExperimentKind::fp_dataset && !j.contains("dataset"))
            fail("dataset", "is required for fp-dataset");
        build_fp(j, c);
        break;
    case ExperimentKind::freq_guided_compare:
        for (const char* k : {"models", "grid", "peaks", "threshold", "input_range", "poisson"}) forbid(k);
        build_compare(j, c);
        break;
    case ExperimentKind::poisson_bench:
        for (const char* k : {"models", "grid", "peaks", "threshold", "input_range", "compare", "dataset"}) forbid(k);
        build_poisson(j, c);
        break;
    }
    if (j.contains("dataset")) c.dataset = build_dataset(j["dataset"], "dataset", c.dataset, base_dir);

    c.canonical = j.dump();
    c.hash = fnv1a_hex(c.canonical);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(text, path.parent_path());
}

std::filesystem::path default_output_dir() {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "rflnn-output";
}

namespace {

struct Writer {
    std::filesystem::path dir;
    std::vector<std::string> artifacts;

    void put(const std::string& rel, const std::string& text) {
        write_text_file(dir / rel, text);
        artifacts.push_back(rel);
    }
};

std::string run_fp(const ExperimentConfig& c, int jobs, Writer& w) {
    Split data = load_source(c.dataset);
    if (c.fp.input_range) {
        if (data.train.input_dim() != 1) fail("input_range", "only applies to one-dimensional inputs");
        data.train = rescale_inputs(data.train, c.fp.input_range->first, c.fp.input_range->second);
    }
    std::ostringstream summary;
    std::ostringstream firsts;
    firsts << "family,seed,peak_alpha,first_step\n";
    for (const auto& plan : c.fp.plans) {
        const std::string fam(to_string(plan.family));
        std::vector<SpectrumTrace> traces(c.seeds.size());
        std::vector<AnyModel> models(c.seeds.size());
        parallel_for(static_cast<Index>(c.seeds.size()), jobs, [&](Index i) {
            const auto k = static_cast<std::size_t>(i);
            traces[k] = run_fp_experiment(data.train, plan, c.fp.options, c.seeds[k], &models[k]);
        });
        Index ordered = 0;
        for (std::size_t i = 0; i < traces.size(); ++i) {
            const auto& t = traces[i];
            const std::string stem = "traces/" + fam + "/seed_" + std::to_string(c.seeds[i]);
            w.put(stem + ".csv", t.to_csv());
            w.put(stem + ".json", t.to_json() + "\n");
            w.put("models/" + fam + "/seed_" + std::to_string(c.seeds[i]) + ".json",
                  std::visit([](const auto& m) { return to_json(m); }, models[i]) + "\n");
            const auto first = t.first_below(c.fp.threshold);
            bool ok = true;
            for (std::size_t k = 0; k < first.size(); ++k) {
                firsts << fam << ',' << c.seeds[i] << ',' << t.peak_alphas[k] << ',';
                if (first[k] >= 0) firsts << t.steps[static_cast<std::size_t>(first[k])];
                firsts << '\n';
                if (k > 0) {
                    const Index a = first[k - 1] < 0 ? t.errors.rows() : first[k - 1];
                    const Index b = first[k] < 0 ? t.errors.rows() : first[k];
                    ok = ok && a <= b;
                }
            }
            ordered += ok;
        }
        summary << fam << ": low-to-high convergence order in " << ordered << "/" << traces.size()
                << " seeds (threshold " << format_real(c.fp.threshold) << ")";
        if (!traces.empty()) {
            summary << ", peaks at alpha";
            for (int a : traces.front().peak_alphas) summary << ' ' << a;
        }
        summary << '\n';
    }
    w.put("fp_first_steps.csv", firsts.str());
    return summary.str();
}

std::string run_compare(const ExperimentConfig& c, int jobs, Writer& w) {
    const Split data = load_source(c.dataset);
    CompareOptions opts = c.compare;
    opts.jobs = jobs;
    const ComparisonReport r = compare_methods(data.train, data.test, c.bls, opts);
    w.put("comparison.csv", r.to_csv());
    w.put("comparison_summary.json", r.summary_json() + "\n");
    std::ostringstream s;
    const char* metric = r.metric == Metric::accuracy ? "accuracy" : "negative RMSE";
    s << "freq-guided compare over " << r.runs() << " runs (" << metric << ")\n"
      << "  fixed  median " << format_real(r.fixed_summary.median) << "\n"
      << "  guided median " << format_real(r.guided_summary.median) << "\n"
      << "  guided better in " << r.guided_wins() << " runs\n";
    return s.str();
}

std::string run_poisson(const ExperimentConfig& c, Writer& w) {
    const auto& p = c.poisson;
    const PoissonSystem sys = p.dim == 1 ? paper_problem_1d(p.n) : paper_problem_2d(p.n);
    const std::string problem = p.dim == 1 ? "poisson1d" : "poisson2d";
    const Vector truth = paper_solution(sys);
    const auto rows = benchmark(sys, problem, truth, p.bench);
    w.put("benchmark.csv", benchmark_csv(rows));

    std::ostringstream table;
    table << "tol";
    for (const auto& m : p.bench.methods) table << ',' << m << "_seconds," << m << "_iterations";
    table << '\n';
    for (double tol : p.bench.tols) {
        table << format_real(tol);
        for (const auto& m : p.bench.methods)
            for (const auto& r : rows)
                if (r.method == m && r.tol == tol)
                    table << ',' << format_real(r.median_seconds) << ',' << format_real(r.iterations);
        table << '\n';
    }
    w.put("benchmark_table.csv", table.str());
    w.put("solution_direct.csv", solution_csv(sys, direct_solve(sys)));

    std::ostringstream s;
    s << problem << " n=" << p.n << " (" << sys.size() << " unknowns), stopping rule " << to_string(p.bench.rule)
      << "\n";
    s << table.str();
    return s.str();
}

} // namespace

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    Writer w;
    w.dir = options.output_dir ? *options.output_dir : config.output_dir ? *config.output_dir : default_output_dir();
    const int jobs = options.jobs ? *options.jobs : config.jobs;
    if (jobs < 1) throw ConfigError("jobs: must be >= 1");
    std::filesystem::create_directories(w.dir);

    json manifest{{"experiment", std::string(to_string(config.kind))},
                  {"config_hash", config.hash},
                  {"config", json::parse(config.canonical)},
                  {"seeds", config.seeds},
                  {"library_version", kLibraryVersion},
                  {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)}};
    RunResult result;
    result.output_dir = w.dir;
    try {
        switch (config.kind) {
        case ExperimentKind::fp_sinc:
        case ExperimentKind::fp_dataset: result.summary = run_fp(config, jobs, w); break;
        case ExperimentKind::freq_guided_compare: result.summary = run_compare(config, jobs, w); break;
        case ExperimentKind::poisson_bench: result.summary = run_poisson(config, w); break;
        }
    } catch (const std::exception& e) {
        manifest["status"] = "partial";
        manifest["error"] = e.what();
        manifest["artifacts"] = w.artifacts;
        write_text_file(w.dir / "run_manifest.json", manifest.dump(2) + "\n");
        throw;
    }
    w.put("summary.txt", result.summary);
    manifest["status"] = "complete";
    manifest["artifacts"] = w.artifacts;
    write_text_file(w.dir / "run_manifest.json", manifest.dump(2) + "\n");
    result.artifacts = w.artifacts;
    result.artifacts.push_back("run_manifest.json");
    return result;
}

} // namespace rflnn
