// SPDX-License-Identifier: Apache-2.0
#include <logrules/backend.hpp>
#include <logrules/detector.hpp>
#include <logrules/epochs.hpp>
#include <logrules/planted.hpp>
#include <logrules/rule_database.hpp>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <set>

namespace py = pybind11;
using namespace logrules;

namespace
{

std::vector<LogLine> to_log_lines(const std::vector<std::string>& lines, const std::optional<std::vector<std::string>>& labels)
{
    if (labels && labels->size() != lines.size())
        throw std::invalid_argument("labels must be parallel to lines");
    auto out = std::vector<LogLine> {};
    out.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i)
        out.push_back({ .index = i, .text = lines[i], .label = labels ? parse_label((*labels)[i]) : Label::Normal });
    return out;
}

SynthesisConfig config_from_kwargs(const py::kwargs& kwargs)
{
    auto config = SynthesisConfig {};
    auto seen = std::set<std::string> {};
    for_each_field(config, [&](const char* key, auto& field) {
        if (kwargs.contains(key))
        {
            field = kwargs[key].cast<std::decay_t<decltype(field)>>();
            seen.insert(key);
        }
    });
    for (auto const& item: kwargs)
    {
        auto const key = item.first.cast<std::string>();
        if (!seen.contains(key))
            throw py::type_error("unknown synthesis option '" + key + "'");
    }
    validate(config);
    return config;
}

std::optional<Split> parse_split(const std::string& name)
{
    if (name == "all")
        return std::nullopt;
    for (auto s: { Split::Train, Split::Validation, Split::Test })
        if (to_string(s) == name)
            return s;
    throw std::invalid_argument("unknown split '" + name + "' (expected train, validation, test or all)");
}

std::vector<Rule> rules_of(const RuleDatabase& db, Label kind)
{
    auto out = std::vector<Rule> {};
    for (auto const& stored: db.rules(kind))
        out.push_back(stored.rule);
    return out;
}

} // namespace

PYBIND11_MODULE(_logrules, m)
{
    m.doc() = "Rule DSL, rule synthesis with the offline mock backend, and cascade detection.";

    static py::exception<ParseError> syntax_error(m, "RuleSyntaxError", PyExc_ValueError);
    py::register_exception<DatabaseError>(m, "DatabaseError", PyExc_ValueError);

    py::class_<Rule>(m, "Rule")
        .def_readonly("name", &Rule::name)
        .def_property_readonly("kind", [](const Rule& r) { return std::string(to_string(r.kind)); })
        .def_readonly("docstring", &Rule::docstring)
        .def_property_readonly("source", [](const Rule& r) { return pretty_print(r); })
        .def_property_readonly("subrule_types", [](const Rule& r) {
            auto out = std::vector<std::string> {};
            for (auto t: classify_subrules(r))
                out.emplace_back(to_string(t));
            return out;
        })
        .def("evaluate", [](const Rule& r, const std::vector<std::string>& window) { return evaluate(r, window); },
             py::arg("window"), "True when the rule holds on the window's lines.")
        .def("__repr__", [](const Rule& r) { return "<Rule " + r.name + " (" + std::string(to_string(r.kind)) + ")>"; });

    m.def(
        "parse_rule",
        [](const std::string& source) {
            auto parsed = parse_rule(source);
            if (auto* error = std::get_if<ParseError>(&parsed))
            {
                PyErr_SetString(syntax_error.ptr(), error->describe().c_str());
                throw py::error_already_set();
            }
            return std::get<Rule>(std::move(parsed));
        },
        py::arg("source"));

    py::class_<RuleDatabase>(m, "RuleDatabase")
        .def_static("load", &load_database, py::arg("path"))
        .def_static("from_json", &database_from_json, py::arg("text"))
        .def("save", [](const RuleDatabase& db, const std::filesystem::path& p) { save_database(db, p); }, py::arg("path"))
        .def("to_json", [](const RuleDatabase& db) { return to_json(db); })
        .def_property_readonly("normal_rules", [](const RuleDatabase& db) { return rules_of(db, Label::Normal); })
        .def_property_readonly("abnormal_rules", [](const RuleDatabase& db) { return rules_of(db, Label::Abnormal); })
        .def_readonly("window_size", &RuleDatabase::window_size)
        .def_readonly("stride", &RuleDatabase::stride)
        .def_readonly("partial", &RuleDatabase::partial)
        .def_readonly("abort_reason", &RuleDatabase::abort_reason)
        .def_readonly("corpus_fingerprint", &RuleDatabase::corpus_fingerprint)
        .def(
            "find",
            [](const RuleDatabase& db, const std::string& name) -> std::optional<Rule> {
                if (auto const* s = db.find(name))
                    return s->rule;
                return std::nullopt;
            },
            py::arg("name"));

    py::class_<DetectionResult>(m, "DetectionResult")
        .def_readonly("window_id", &DetectionResult::window_id)
        .def_property_readonly("verdict", [](const DetectionResult& r) { return std::string(to_string(r.verdict)); })
        .def_readonly("matched_rule", &DetectionResult::matched_rule)
        .def_property_readonly("stage", [](const DetectionResult& r) { return std::string(to_string(r.stage)); })
        .def("to_json", [](const DetectionResult& r) { return to_json_line(r); });

    py::class_<Detector>(m, "Detector")
        .def(py::init<RuleDatabase>(), py::arg("database"))
        .def(
            "classify",
            [](const Detector& d, const std::vector<std::string>& window, WindowId window_id) {
                return d.classify(LogWindow { .id = window_id, .lines = window });
            },
            py::arg("window"), py::arg("window_id") = 0);

    py::class_<Metrics>(m, "Metrics")
        .def_readonly("tp", &Metrics::tp)
        .def_readonly("fp", &Metrics::fp)
        .def_readonly("fn", &Metrics::fn)
        .def_readonly("tn", &Metrics::tn)
        .def_readonly("precision", &Metrics::precision)
        .def_readonly("recall", &Metrics::recall)
        .def_readonly("f1", &Metrics::f1)
        .def("to_json", [](const Metrics& x) { return to_json(x); });

    m.def("metrics_from_counts", &metrics_from_counts, py::arg("tp"), py::arg("fp"), py::arg("fn"), py::arg("tn"));

    m.def(
        "make_windows",
        [](const std::vector<std::string>& lines, std::optional<std::vector<std::string>> labels, std::size_t window_size,
           std::optional<std::size_t> stride) {
            auto out = std::vector<std::pair<std::vector<std::string>, std::string>> {};
            for (auto& w: make_windows(to_log_lines(lines, labels), window_size, stride.value_or(window_size)))
                out.emplace_back(std::move(w.lines), std::string(to_string(w.label)));
            return out;
        },
        py::arg("lines"), py::arg("labels") = py::none(), py::arg("window_size") = 20, py::arg("stride") = py::none(),
        "Groups lines into (lines, label) windows; a window is abnormal when any of its lines is.");

    m.def(
        "synthesize",
        [](const std::vector<std::string>& lines, const std::vector<std::string>& labels, std::size_t window_size,
           std::optional<std::size_t> stride, const py::kwargs& kwargs) {
            auto const config = config_from_kwargs(kwargs);
            auto const step = stride.value_or(window_size);
            auto const dataset = split_dataset(make_windows(to_log_lines(lines, labels), window_size, step));
            py::gil_scoped_release release;
            auto backend = MockBackend {};
            auto db = run_synthesis(dataset, backend, config);
            db.window_size = window_size;
            db.stride = step;
            return db;
        },
        py::arg("lines"), py::arg("labels"), py::arg("window_size") = 20, py::arg("stride") = py::none(),
        "Synthesizes a rule database with the offline mock backend. Keyword arguments override synthesis settings.");

    m.def(
        "evaluate",
        [](const RuleDatabase& db, const std::vector<std::string>& lines, const std::vector<std::string>& labels,
           std::optional<std::size_t> window_size, std::optional<std::size_t> stride, const std::string& split) {
            auto const which = parse_split(split);
            auto const size = window_size.value_or(db.window_size);
            auto const step = stride.value_or(window_size ? size : db.stride);
            auto const dataset = split_dataset(make_windows(to_log_lines(lines, labels), size, step));
            auto const detector = Detector(db);
            auto results = std::vector<DetectionResult> {};
            auto truth = std::vector<GroundTruth> {};
            for (std::size_t i = 0; i < dataset.windows.size(); ++i)
                if (!which || dataset.split[i] == *which)
                {
                    results.push_back(detector.classify(dataset.windows[i]));
                    truth.push_back({ dataset.windows[i].id, dataset.windows[i].label });
                }
            return compute_metrics(results, truth);
        },
        py::arg("database"), py::arg("lines"), py::arg("labels"), py::arg("window_size") = py::none(),
        py::arg("stride") = py::none(), py::arg("split") = "test");

    m.def(
        "generate_corpus",
        [](const std::string& kind, std::size_t windows, std::size_t window_size, double abnormal_fraction,
           std::uint64_t seed, double minority_fraction, std::size_t patterns) {
            auto const options = PlantedOptions { .windows = windows, .window_size = window_size,
                                                  .abnormal_fraction = abnormal_fraction, .seed = seed };
            SyntheticCorpus corpus;
            if (kind == "planted")
                corpus = planted_corpus(options);
            else if (kind == "dominant")
                corpus = dominant_pattern_corpus(options, minority_fraction);
            else if (kind == "geometric")
                corpus = geometric_corpus(options, patterns);
            else
                throw std::invalid_argument("unknown corpus kind '" + kind + "'");
            auto out = py::dict {};
            auto lines = std::vector<std::string> {};
            auto labels = std::vector<std::string> {};
            for (auto const& l: corpus.lines)
            {
                lines.push_back(l.text);
                labels.emplace_back(to_string(l.label));
            }
            auto window_labels = std::vector<std::string> {};
            for (auto l: corpus.window_labels)
                window_labels.emplace_back(to_string(l));
            out["lines"] = lines;
            out["labels"] = labels;
            out["window_labels"] = window_labels;
            out["window_patterns"] = corpus.window_patterns;
            out["window_size"] = corpus.window_size;
            return out;
        },
        py::arg("kind") = "planted", py::arg("windows") = 2000, py::arg("window_size") = 20,
        py::arg("abnormal_fraction") = 0.1, py::arg("seed") = 7, py::arg("minority_fraction") = 0.005,
        py::arg("patterns") = 6);
}
