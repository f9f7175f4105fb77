#include "cil/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <numeric>
#include <set>
#include <sstream>

#include "cil/errors.hpp"
#include "cil/rng.hpp"

namespace cil {
namespace {

[[noreturn]] void fail(const std::string& message) { throw ConfigError("config: " + message); }

std::string quoted(const std::string& path) { return "\"" + path + "\""; }

void expect_object(const Json& j, const std::string& path) {
    if (!j.is_object()) fail(quoted(path) + " must be an object");
}

// Strict schema: anything not in the allow list is a hard error so typos never
// silently fall back to defaults.
void reject_unknown(const Json& j, const std::string& scope,
                    std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool known =
            std::any_of(allowed.begin(), allowed.end(),
                        [&](const char* k) { return it.key() == k; });
        if (!known)
            fail("unknown key " + quoted(scope.empty() ? it.key() : scope + "." + it.key()));
    }
}

const Json* find(const Json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

long long get_int(const Json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(quoted(path) + " must be an integer");
    return v.get<long long>();
}

long long get_positive_int(const Json& v, const std::string& path) {
    const long long n = get_int(v, path);
    if (n < 1) fail(quoted(path) + " must be a positive integer");
    return n;
}

std::uint64_t get_seed(const Json& v, const std::string& path) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0))
        fail(quoted(path) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

double get_number(const Json& v, const std::string& path) {
    if (!v.is_number()) fail(quoted(path) + " must be a number");
    return v.get<double>();
}

bool get_bool(const Json& v, const std::string& path) {
    if (!v.is_boolean()) fail(quoted(path) + " must be a boolean");
    return v.get<bool>();
}

std::string get_string(const Json& v, const std::string& path) {
    if (!v.is_string()) fail(quoted(path) + " must be a string");
    return v.get<std::string>();
}

DatasetSpec parse_dataset(const Json& j) {
    expect_object(j, "dataset");
    const Json* kind = find(j, "kind");
    if (!kind) fail(quoted("dataset.kind") + " is required");
    const std::string name = get_string(*kind, "dataset.kind");

    DatasetSpec d;
    if (name == "synthetic") {
        d.kind = DatasetKind::synthetic;
        reject_unknown(j, "dataset",
                       {"kind", "num_classes", "train_per_class", "test_per_class", "input_dim",
                        "separation", "noise", "seed"});
        SyntheticSpec& s = d.synthetic;
        if (const Json* v = find(j, "num_classes"))
            s.num_classes = static_cast<int>(get_positive_int(*v, "dataset.num_classes"));
        if (const Json* v = find(j, "train_per_class"))
            s.train_per_class = get_positive_int(*v, "dataset.train_per_class");
        if (const Json* v = find(j, "test_per_class"))
            s.test_per_class = get_positive_int(*v, "dataset.test_per_class");
        if (const Json* v = find(j, "input_dim"))
            s.input_dim = get_positive_int(*v, "dataset.input_dim");
        if (const Json* v = find(j, "separation")) s.separation = get_number(*v, "dataset.separation");
        if (const Json* v = find(j, "noise")) s.noise = get_number(*v, "dataset.noise");
        if (const Json* v = find(j, "seed")) d.synthetic_seed = get_seed(*v, "dataset.seed");
    } else if (name == "cifar100") {
        d.kind = DatasetKind::cifar100;
        reject_unknown(j, "dataset", {"kind", "root"});
        const Json* root = find(j, "root");
        if (!root) fail(quoted("dataset.root") + " is required for cifar100");
        d.root = get_string(*root, "dataset.root");
    } else {
        fail(quoted("dataset.kind") + " must be \"synthetic\" or \"cifar100\"");
    }
    return d;
}

ScheduleSpec parse_schedule(const Json& j) {
    expect_object(j, "schedule");
    reject_unknown(j, "schedule", {"steps", "classes_per_step", "class_order", "order_seed"});

    ScheduleSpec s;
    const Json* sizes = find(j, "classes_per_step");
    if (!sizes) fail(quoted("schedule.classes_per_step") + " is required");

    std::optional<long long> steps;
    if (const Json* v = find(j, "steps")) steps = get_positive_int(*v, "schedule.steps");

    s.classes_per_step.clear();
    if (sizes->is_array()) {
        for (std::size_t i = 0; i < sizes->size(); ++i)
            s.classes_per_step.push_back(static_cast<Eigen::Index>(get_positive_int(
                (*sizes)[i], "schedule.classes_per_step[" + std::to_string(i) + "]")));
        if (s.classes_per_step.empty()) fail(quoted("schedule.classes_per_step") + " must be non-empty");
        if (steps && *steps != static_cast<long long>(s.classes_per_step.size()))
            fail(quoted("schedule.steps") + " does not match the classes_per_step list length");
    } else {
        const long long per = get_positive_int(*sizes, "schedule.classes_per_step");
        if (!steps)
            fail(quoted("schedule.steps") +
                 " is required when classes_per_step is a single number");
        s.classes_per_step.assign(static_cast<std::size_t>(*steps),
                                  static_cast<Eigen::Index>(per));
    }

    if (const Json* v = find(j, "class_order")) {
        if (!v->is_array()) fail(quoted("schedule.class_order") + " must be an array of labels");
        std::vector<int> order;
        for (std::size_t i = 0; i < v->size(); ++i)
            order.push_back(static_cast<int>(
                get_int((*v)[i], "schedule.class_order[" + std::to_string(i) + "]")));
        s.class_order = std::move(order);
    }
    if (const Json* v = find(j, "order_seed")) s.order_seed = get_seed(*v, "schedule.order_seed");
    return s;
}

VariationSpec parse_variation(const Json& j) {
    if (j.is_string()) return variation_preset(j.get<std::string>());
    expect_object(j, "variation");
    reject_unknown(j, "variation",
                   {"preset", "use_kd", "use_wa", "use_wnl", "use_unit_norm_post",
                    "restrict_nonnegative", "bias_enabled", "distill_from_precorrection",
                    "norm_kind"});

    VariationSpec v;
    if (const Json* p = find(j, "preset")) v = variation_preset(get_string(*p, "variation.preset"));
    if (const Json* f = find(j, "use_kd")) v.use_kd = get_bool(*f, "variation.use_kd");
    if (const Json* f = find(j, "use_wa")) v.use_wa = get_bool(*f, "variation.use_wa");
    if (const Json* f = find(j, "use_wnl")) v.use_wnl = get_bool(*f, "variation.use_wnl");
    if (const Json* f = find(j, "use_unit_norm_post"))
        v.use_unit_norm_post = get_bool(*f, "variation.use_unit_norm_post");
    if (const Json* f = find(j, "restrict_nonnegative"))
        v.restrict_nonnegative = get_bool(*f, "variation.restrict_nonnegative");
    if (const Json* f = find(j, "bias_enabled")) v.bias_enabled = get_bool(*f, "variation.bias_enabled");
    if (const Json* f = find(j, "distill_from_precorrection"))
        v.distill_from_precorrection = get_bool(*f, "variation.distill_from_precorrection");
    if (const Json* f = find(j, "norm_kind")) {
        const std::string kind = get_string(*f, "variation.norm_kind");
        if (kind == "l1")
            v.norm_kind = NormKind::one_norm;
        else if (kind == "l2")
            v.norm_kind = NormKind::two_norm;
        else
            fail(quoted("variation.norm_kind") + " must be \"l1\" or \"l2\"");
    }
    return v;
}

TrainConfig train_schedule_preset(const std::string& name, const std::string& path) {
    if (name == "desk") return TrainConfig::desk_default();
    if (name == "cifar") return TrainConfig::cifar_schedule();
    fail(quoted(path) + " must be \"desk\" or \"cifar\"");
}

TrainConfig parse_train(const Json& j) {
    if (j.is_string()) return train_schedule_preset(j.get<std::string>(), "train");
    expect_object(j, "train");
    reject_unknown(j, "train",
                   {"preset", "epochs", "batch_size", "learning_rate", "milestones", "lr_decay",
                    "momentum", "weight_decay", "temperature", "lambda_override"});

    TrainConfig t = TrainConfig::desk_default();
    if (const Json* p = find(j, "preset"))
        t = train_schedule_preset(get_string(*p, "train.preset"), "train.preset");
    if (const Json* v = find(j, "epochs"))
        t.epochs = static_cast<int>(get_positive_int(*v, "train.epochs"));
    if (const Json* v = find(j, "batch_size"))
        t.batch_size = static_cast<int>(get_positive_int(*v, "train.batch_size"));
    if (const Json* v = find(j, "learning_rate")) t.learning_rate = get_number(*v, "train.learning_rate");
    if (const Json* v = find(j, "milestones")) {
        if (!v->is_array()) fail(quoted("train.milestones") + " must be an array of epochs");
        t.milestones.clear();
        for (std::size_t i = 0; i < v->size(); ++i)
            t.milestones.push_back(static_cast<int>(
                get_int((*v)[i], "train.milestones[" + std::to_string(i) + "]")));
    }
    if (const Json* v = find(j, "lr_decay")) t.lr_decay = get_number(*v, "train.lr_decay");
    if (const Json* v = find(j, "momentum")) t.momentum = get_number(*v, "train.momentum");
    if (const Json* v = find(j, "weight_decay")) t.weight_decay = get_number(*v, "train.weight_decay");
    if (const Json* v = find(j, "temperature")) t.loss.temperature = get_number(*v, "train.temperature");
    if (const Json* v = find(j, "lambda_override")) {
        if (v->is_null())
            t.loss.lambda_override.reset();
        else
            t.loss.lambda_override = get_number(*v, "train.lambda_override");
    }
    return t;
}

ModelSpec parse_model(const Json& j) {
    expect_object(j, "model");
    reject_unknown(j, "model", {"hidden_dim", "feature_dim", "rectify_features"});
    ModelSpec m;
    if (const Json* v = find(j, "hidden_dim")) m.hidden_dim = get_positive_int(*v, "model.hidden_dim");
    if (const Json* v = find(j, "feature_dim"))
        m.feature_dim = get_positive_int(*v, "model.feature_dim");
    if (const Json* v = find(j, "rectify_features"))
        m.rectify_features = get_bool(*v, "model.rectify_features");
    return m;
}

MemorySpec parse_memory(const Json& j) {
    expect_object(j, "memory");
    reject_unknown(j, "memory", {"budget", "strategy"});
    MemorySpec m;
    if (const Json* v = find(j, "budget")) m.budget = get_positive_int(*v, "memory.budget");
    if (const Json* v = find(j, "strategy")) {
        const std::string s = get_string(*v, "memory.strategy");
        if (s == "herding")
            m.strategy = ExemplarMemory::Strategy::herding;
        else if (s == "random")
            m.strategy = ExemplarMemory::Strategy::random;
        else
            fail(quoted("memory.strategy") + " must be \"herding\" or \"random\"");
    }
    return m;
}

}  // namespace

int DatasetSpec::label_count() const {
    switch (kind) {
        case DatasetKind::synthetic: return synthetic.num_classes;
        case DatasetKind::cifar100: return 100;
    }
    throw InvalidState("unhandled dataset kind");
}

void DatasetSpec::validate() const {
    if (kind == DatasetKind::synthetic) {
        const SyntheticSpec& s = synthetic;
        if (s.num_classes < 1 || s.train_per_class < 1 || s.test_per_class < 1 || s.input_dim < 1)
            fail("synthetic dataset sizes must be positive");
        if (!(s.separation > 0.0)) fail(quoted("dataset.separation") + " must be positive");
        if (s.noise < 0.0) fail(quoted("dataset.noise") + " must be non-negative");
    } else {
        if (root.empty()) fail(quoted("dataset.root") + " must not be empty");
    }
}

Eigen::Index ScheduleSpec::total_classes() const {
    return std::accumulate(classes_per_step.begin(), classes_per_step.end(), Eigen::Index{0});
}

void ScheduleSpec::validate() const {
    if (classes_per_step.empty()) fail(quoted("schedule.classes_per_step") + " must be non-empty");
    for (Eigen::Index c : classes_per_step)
        if (c < 1) fail(quoted("schedule.classes_per_step") + " entries must be positive");
    if (class_order) {
        if (static_cast<Eigen::Index>(class_order->size()) < total_classes())
            fail(quoted("schedule.class_order") + " is shorter than the schedule needs");
        std::set<int> seen;
        for (int label : *class_order) {
            if (label < 0) fail(quoted("schedule.class_order") + " entries must be non-negative");
            if (!seen.insert(label).second)
                fail(quoted("schedule.class_order") + " contains duplicate label " +
                     std::to_string(label));
        }
    }
}

VariationSpec ExperimentConfig::variation_preset_default() { return variation_preset("ours"); }

void ExperimentConfig::validate() const {
    dataset.validate();
    schedule.validate();
    variation.validate();
    train.validate();
    model.validate();
    memory.validate();
    const Eigen::Index needed = schedule.total_classes();
    const int available = dataset.label_count();
    if (needed > available)
        fail("schedule needs " + std::to_string(needed) + " classes but the dataset provides " +
             std::to_string(available));
    if (schedule.class_order) {
        for (int label : *schedule.class_order)
            if (label >= available)
                fail(quoted("schedule.class_order") + " label " + std::to_string(label) +
                     " is outside the dataset's " + std::to_string(available) + " labels");
    }
    if (output.empty()) fail(quoted("output") + " must not be empty");
}

ExperimentConfig config_from_json(const Json& j) {
    expect_object(j, "config");
    reject_unknown(j, "",
                   {"dataset", "schedule", "variation", "train", "model", "memory", "output",
                    "seed"});
    const Json* dataset = find(j, "dataset");
    if (!dataset) fail(quoted("dataset") + " section is required");
    const Json* schedule = find(j, "schedule");
    if (!schedule) fail(quoted("schedule") + " section is required");

    ExperimentConfig c;
    c.dataset = parse_dataset(*dataset);
    c.schedule = parse_schedule(*schedule);
    if (const Json* v = find(j, "variation")) c.variation = parse_variation(*v);
    if (const Json* v = find(j, "train")) c.train = parse_train(*v);
    if (const Json* v = find(j, "model")) c.model = parse_model(*v);
    if (const Json* v = find(j, "memory")) c.memory = parse_memory(*v);
    if (const Json* v = find(j, "output")) c.output = get_string(*v, "output");
    if (const Json* v = find(j, "seed")) c.seed = get_seed(*v, "seed");
    try {
        c.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        // Range checks inside the component specs also count as config errors
        // when the values came from a config document.
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

Json config_to_json(const ExperimentConfig& config) {
    Json dataset;
    if (config.dataset.kind == DatasetKind::synthetic) {
        dataset = Json{{"kind", "synthetic"},
                       {"num_classes", config.dataset.synthetic.num_classes},
                       {"train_per_class", config.dataset.synthetic.train_per_class},
                       {"test_per_class", config.dataset.synthetic.test_per_class},
                       {"input_dim", config.dataset.synthetic.input_dim},
                       {"separation", config.dataset.synthetic.separation},
                       {"noise", config.dataset.synthetic.noise}};
        if (config.dataset.synthetic_seed) dataset["seed"] = *config.dataset.synthetic_seed;
    } else {
        dataset = Json{{"kind", "cifar100"}, {"root", config.dataset.root}};
    }

    Json schedule{{"steps", config.schedule.classes_per_step.size()},
                  {"classes_per_step", config.schedule.classes_per_step}};
    if (config.schedule.class_order) schedule["class_order"] = *config.schedule.class_order;
    if (config.schedule.order_seed) schedule["order_seed"] = *config.schedule.order_seed;

    const Json variation{
        {"use_kd", config.variation.use_kd},
        {"use_wa", config.variation.use_wa},
        {"use_wnl", config.variation.use_wnl},
        {"use_unit_norm_post", config.variation.use_unit_norm_post},
        {"restrict_nonnegative", config.variation.restrict_nonnegative},
        {"bias_enabled", config.variation.bias_enabled},
        {"distill_from_precorrection", config.variation.distill_from_precorrection},
        {"norm_kind", config.variation.norm_kind == NormKind::one_norm ? "l1" : "l2"}};

    Json train{{"epochs", config.train.epochs},
               {"batch_size", config.train.batch_size},
               {"learning_rate", config.train.learning_rate},
               {"milestones", config.train.milestones},
               {"lr_decay", config.train.lr_decay},
               {"momentum", config.train.momentum},
               {"weight_decay", config.train.weight_decay},
               {"temperature", config.train.loss.temperature}};
    if (config.train.loss.lambda_override) train["lambda_override"] = *config.train.loss.lambda_override;

    const Json model{{"hidden_dim", config.model.hidden_dim},
                     {"feature_dim", config.model.feature_dim},
                     {"rectify_features", config.model.rectify_features}};

    const Json memory{
        {"budget", config.memory.budget},
        {"strategy",
         config.memory.strategy == ExemplarMemory::Strategy::herding ? "herding" : "random"}};

    return Json{{"dataset", dataset},     {"schedule", schedule}, {"variation", variation},
                {"train", train},         {"model", model},       {"memory", memory},
                {"output", config.output}, {"seed", config.seed}};
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found or unreadable: " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void apply_override(Json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key.path=value, got \"" + assignment + "\"");
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    // Values are JSON when they parse as JSON (numbers, booleans, arrays,
    // null) and plain strings otherwise, so kind=synthetic needs no quoting.
    Json value = Json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = raw;

    Json* cursor = &j;
    std::istringstream parts(key);
    std::string component;
    std::vector<std::string> path;
    while (std::getline(parts, component, '.')) path.push_back(component);
    if (path.empty() || std::any_of(path.begin(), path.end(),
                                    [](const std::string& p) { return p.empty(); }))
        throw ConfigError("override key has an empty path component: \"" + key + "\"");
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        Json& next = (*cursor)[path[i]];
        if (!next.is_object() && !next.is_null())
            throw ConfigError("override path \"" + key + "\" descends into a non-object value");
        cursor = &next;
    }
    (*cursor)[path.back()] = std::move(value);
}

VariationSpec variation_preset(const std::string& name) {
    VariationSpec v;
    v.restrict_nonnegative = false;
    if (name == "variation1" || name == "upper_bound") {
        // plain cross-entropy
    } else if (name == "variation2") {
        v.use_wa = true;
        v.restrict_nonnegative = true;
    } else if (name == "variation3") {
        v.use_kd = true;
    } else if (name == "variation4") {
        v.use_kd = true;
        v.use_wnl = true;
    } else if (name == "ours") {
        v.use_kd = true;
        v.use_wa = true;
        v.restrict_nonnegative = true;
    } else {
        std::string known;
        for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset \"" + name + "\" (available: " + known + ")");
    }
    return v;
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"variation1", "variation2", "variation3",
                                                   "variation4", "ours",       "upper_bound"};
    return names;
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    c.variation = variation_preset(name);
    c.dataset.kind = DatasetKind::synthetic;
    c.dataset.synthetic = SyntheticSpec{};
    c.schedule.classes_per_step.assign(5, 2);
    if (name == "upper_bound") {
        // Joint training on every class in one step: the non-incremental
        // reference ceiling.
        c.schedule.classes_per_step = {c.dataset.synthetic.num_classes};
    }
    c.train = TrainConfig::desk_default();
    c.memory.budget = 20;
    c.output = "runs/" + name;
    c.validate();
    return c;
}

Dataset load_dataset(const DatasetSpec& spec, std::uint64_t global_seed) {
    spec.validate();
    if (spec.kind == DatasetKind::synthetic) {
        SyntheticSpec s = spec.synthetic;
        s.seed = spec.synthetic_seed ? *spec.synthetic_seed : derive_seed(global_seed, "dataset");
        return generate_synthetic(s);
    }
    return load_cifar100(spec.root);
}

TaskSchedule make_schedule(const ScheduleSpec& spec, int label_count, std::uint64_t global_seed) {
    spec.validate();
    const Eigen::Index total = spec.total_classes();
    if (total > label_count)
        fail("schedule needs " + std::to_string(total) + " classes but the dataset provides " +
             std::to_string(label_count));

    std::vector<int> order;
    if (spec.class_order) {
        for (int label : *spec.class_order)
            if (label >= label_count)
                fail(quoted("schedule.class_order") + " label " + std::to_string(label) +
                     " is outside the dataset's " + std::to_string(label_count) + " labels");
        order = *spec.class_order;
    } else {
        order.resize(static_cast<std::size_t>(label_count));
        std::iota(order.begin(), order.end(), 0);
        const std::uint64_t s =
            spec.order_seed ? *spec.order_seed : derive_seed(global_seed, "class-order");
        Rng rng = make_rng(s);
        std::shuffle(order.begin(), order.end(), rng);
    }
    order.resize(static_cast<std::size_t>(total));
    return TaskSchedule::from_order(order, spec.classes_per_step);
}

}  // namespace cil
