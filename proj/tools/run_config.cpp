#include "run_config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "json.hpp"

#include "windnbm/error.hpp"

namespace windnbm::tools {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& message) {
    throw Error(ErrorCategory::config, "config: " + where + ": " + message);
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) {
            fail(where.empty() ? key : where + "." + key, "unknown key");
        }
    }
}

const json* find(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

std::string sub(const std::string& where, const char* key) {
    return where.empty() ? key : where + "." + key;
}

std::int64_t get_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    return j.get<std::int64_t>();
}

std::uint64_t get_u64(const json& j, const std::string& where) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        fail(where, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

double get_number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

std::string get_string(const json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
}

StepRange get_range(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) fail(where, "expected [begin, end]");
    StepRange r{get_int(j[0], where), get_int(j[1], where)};
    if (r.begin >= r.end) fail(where, "begin must be < end");
    return r;
}

void parse_data(const json& j, RunConfig& cfg) {
    check_keys(j, {"source", "csv_path", "synthetic"}, "data");
    if (const json* source = find(j, "source")) {
        const std::string s = get_string(*source, "data.source");
        if (s == "synthetic") {
            cfg.source = DataSource::synthetic;
        } else if (s == "csv") {
            cfg.source = DataSource::csv;
        } else {
            fail("data.source", "expected \"synthetic\" or \"csv\", got \"" + s + "\"");
        }
    }
    if (const json* path = find(j, "csv_path")) {
        cfg.csv_path = get_string(*path, "data.csv_path");
    }
    if (cfg.source == DataSource::csv && cfg.csv_path.empty()) {
        fail("data.csv_path", "required when data.source is \"csv\"");
    }
    if (const json* synth = find(j, "synthetic")) {
        check_keys(*synth, {"n_months"}, "data.synthetic");
        if (const json* n = find(*synth, "n_months")) {
            const std::int64_t months = get_int(*n, "data.synthetic.n_months");
            if (months < 1) fail("data.synthetic.n_months", "must be >= 1");
            cfg.synthetic.n_months = static_cast<int>(months);
        }
    }
}

void parse_split(const json& j, RunConfig& cfg) {
    check_keys(j, {"first_step", "train", "calibration", "monitoring"}, "split");
    const bool has_explicit = find(j, "train") || find(j, "calibration") || find(j, "monitoring");
    if (const json* first = find(j, "first_step")) {
        if (has_explicit) {
            fail("split", "give either first_step or explicit ranges, not both");
        }
        cfg.split_first_step = get_int(*first, "split.first_step");
        return;
    }
    if (!has_explicit) return;
    if (!find(j, "train") || !find(j, "calibration") || !find(j, "monitoring")) {
        fail("split", "explicit splits need train, calibration and monitoring");
    }
    SplitSpec spec;
    spec.train = get_range(*find(j, "train"), "split.train");
    spec.calibration = get_range(*find(j, "calibration"), "split.calibration");
    spec.monitoring = get_range(*find(j, "monitoring"), "split.monitoring");
    cfg.explicit_split = spec;
}

void parse_train(const json& j, RunConfig& cfg) {
    check_keys(j, {"epochs", "batch_size", "learning_rate", "early_stopping_patience"},
               "train");
    if (const json* v = find(j, "epochs")) {
        const std::int64_t epochs = get_int(*v, "train.epochs");
        if (epochs < 1) fail("train.epochs", "must be >= 1");
        cfg.train.epochs = static_cast<int>(epochs);
    }
    if (const json* v = find(j, "batch_size")) {
        const std::int64_t batch = get_int(*v, "train.batch_size");
        if (batch < 1) fail("train.batch_size", "must be >= 1");
        cfg.train.batch_size = static_cast<int>(batch);
    }
    if (const json* v = find(j, "learning_rate")) {
        const double lr = get_number(*v, "train.learning_rate");
        if (!(lr > 0.0)) fail("train.learning_rate", "must be > 0");
        cfg.train.learning_rate = lr;
    }
    if (const json* v = find(j, "early_stopping_patience")) {
        const std::int64_t patience = get_int(*v, "train.early_stopping_patience");
        if (patience < 0) fail("train.early_stopping_patience", "must be >= 0");
        cfg.train.early_stopping_patience = static_cast<int>(patience);
    }
}

void parse_fault(const json& j, RunConfig& cfg) {
    check_keys(j, {"unit_scale", "n_onsets", "slopes", "onset_window"}, "fault");
    if (const json* v = find(j, "unit_scale")) {
        const double scale = get_number(*v, "fault.unit_scale");
        if (!(scale > 0.0)) fail("fault.unit_scale", "must be > 0");
        cfg.unit_scale = scale;
    }
    if (const json* v = find(j, "n_onsets")) {
        const std::int64_t n = get_int(*v, "fault.n_onsets");
        if (n < 1) fail("fault.n_onsets", "must be >= 1");
        cfg.n_onsets = static_cast<int>(n);
    }
    if (const json* v = find(j, "slopes")) {
        if (!v->is_array() || v->empty()) fail("fault.slopes", "expected a non-empty array");
        cfg.slopes.clear();
        for (const json& s : *v) {
            const std::int64_t slope = get_int(s, "fault.slopes");
            if (slope < kMinSlopeIndex || slope > kMaxSlopeIndex) {
                fail("fault.slopes", "slope indices must be in [1, 10]");
            }
            cfg.slopes.push_back(static_cast<int>(slope));
        }
    }
    if (const json* v = find(j, "onset_window")) {
        const StepRange r = get_range(*v, "fault.onset_window");
        cfg.onset_window = OnsetWindow{r.begin, r.end - 1};  // config gives half-open
    }
}

void parse_evaluate(const json& j, RunConfig& cfg) {
    check_keys(j, {"criteria", "n_jobs", "trace_cases"}, "evaluate");
    if (const json* v = find(j, "criteria")) {
        const std::string s = get_string(*v, "evaluate.criteria");
        if (s == "both") {
            cfg.criteria = {AlarmCriterion::criterion_1, AlarmCriterion::criterion_2};
        } else if (s == "criterion_1") {
            cfg.criteria = {AlarmCriterion::criterion_1};
        } else if (s == "criterion_2") {
            cfg.criteria = {AlarmCriterion::criterion_2};
        } else {
            fail("evaluate.criteria",
                 "expected \"both\", \"criterion_1\" or \"criterion_2\", got \"" + s + "\"");
        }
    }
    if (const json* v = find(j, "n_jobs")) {
        const std::int64_t n = get_int(*v, "evaluate.n_jobs");
        if (n < 1) fail("evaluate.n_jobs", "must be >= 1");
        cfg.n_jobs = static_cast<int>(n);
    }
    if (const json* v = find(j, "trace_cases")) {
        const std::int64_t n = get_int(*v, "evaluate.trace_cases");
        if (n < 0) fail("evaluate.trace_cases", "must be >= 0");
        cfg.trace_cases = static_cast<int>(n);
    }
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot open config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);  // allow comments
    } catch (const json::exception& e) {
        throw Error(ErrorCategory::parse, path.string() + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw Error(ErrorCategory::config, "config: top level must be an object");
    }

    check_keys(doc, {"master_seed", "output_dir", "data", "split", "train", "fault", "evaluate"},
               "");

    RunConfig cfg;
    cfg.slopes = default_slopes();

    const json* seed = find(doc, "master_seed");
    if (!seed) fail("master_seed", "required");
    cfg.master_seed = get_u64(*seed, "master_seed");

    if (const json* out = find(doc, "output_dir")) {
        cfg.output_dir = get_string(*out, "output_dir");
        if (cfg.output_dir.empty()) fail("output_dir", "must not be empty");
    }
    if (const json* data = find(doc, "data")) parse_data(*data, cfg);
    if (const json* split = find(doc, "split")) parse_split(*split, cfg);
    if (const json* tr = find(doc, "train")) parse_train(*tr, cfg);
    if (const json* fault = find(doc, "fault")) parse_fault(*fault, cfg);
    if (const json* ev = find(doc, "evaluate")) parse_evaluate(*ev, cfg);
    return cfg;
}

}  // namespace windnbm::tools
