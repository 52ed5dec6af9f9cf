#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "zeromerge/harness.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_zeromerge, m) {
    m.doc() = "streaming KV-cache compression with tripartite budgets and "
              "fusion-compensated attention";

    py::class_<zm::Budgets>(m, "Budgets")
        .def(py::init<>())
        .def_readwrite("context", &zm::Budgets::context)
        .def_readwrite("residual", &zm::Budgets::residual)
        .def_readwrite("proximity", &zm::Budgets::proximity)
        .def("total", &zm::Budgets::total)
        .def("__repr__", [](const zm::Budgets& b) {
            return "Budgets(context=" + std::to_string(b.context) +
                   ", residual=" + std::to_string(b.residual) +
                   ", proximity=" + std::to_string(b.proximity) + ")";
        });

    m.def("make_budgets", &zm::make_budgets, py::arg("context"),
          py::arg("residual"), py::arg("proximity"));

    py::class_<zm::RunConfig>(m, "RunConfig")
        .def(py::init([](int64_t head_dim, double decay, double compensation,
                         const zm::Budgets& budgets, uint64_t seed) {
                 zm::RunConfig config{head_dim, decay, compensation, budgets,
                                      seed};
                 zm::validate_config(config);
                 return config;
             }),
             py::arg("head_dim"), py::arg("decay") = 0.98,
             py::arg("compensation") = 0.6,
             py::arg("budgets") = zm::Budgets{}, py::arg("seed") = 0)
        .def_readwrite("head_dim", &zm::RunConfig::head_dim)
        .def_readwrite("decay", &zm::RunConfig::decay)
        .def_readwrite("compensation", &zm::RunConfig::compensation)
        .def_readwrite("budgets", &zm::RunConfig::budgets)
        .def_readwrite("seed", &zm::RunConfig::seed);

    py::class_<zm::CacheEntry>(m, "CacheEntry")
        .def(py::init<>())
        .def_readwrite("key", &zm::CacheEntry::key)
        .def_readwrite("value", &zm::CacheEntry::value)
        .def_readwrite("fusion_count", &zm::CacheEntry::fusion_count)
        .def_readwrite("score", &zm::CacheEntry::score)
        .def_readwrite("origin_pos", &zm::CacheEntry::origin_pos)
        .def_readonly("id", &zm::CacheEntry::id);

    py::class_<zm::AttentionResult>(m, "AttentionResult")
        .def_readonly("weights", &zm::AttentionResult::weights)
        .def_readonly("output", &zm::AttentionResult::output);

    m.def(
        "stable_softmax",
        [](const std::vector<double>& logits) {
            return zm::stable_softmax(logits);
        },
        py::arg("logits"));
    m.def(
        "full_attention",
        [](const zm::Vector& q, const std::vector<zm::Vector>& keys,
           const std::vector<zm::Vector>& values) {
            return zm::full_attention(q, keys, values);
        },
        py::arg("q"), py::arg("keys"), py::arg("values"));
    m.def(
        "compensated_attention",
        [](const zm::Vector& q, const std::vector<zm::CacheEntry>& entries,
           double alpha) {
            return zm::compensated_attention(q, entries, alpha);
        },
        py::arg("q"), py::arg("entries"), py::arg("alpha"));

    m.def("closed_form_score",
          [](const std::vector<double>& history, double decay) {
              return zm::closed_form_score(history, decay);
          },
          py::arg("weight_history"), py::arg("decay"));

    py::class_<zm::StepDetail>(m, "StepDetail")
        .def_readonly("attention", &zm::StepDetail::attention)
        .def_readonly("origin_pos", &zm::StepDetail::origin_pos)
        .def_readonly("fusion_count", &zm::StepDetail::fusion_count);

    py::class_<zm::ZeroMergeCache>(m, "ZeroMergeCache")
        .def(py::init<const zm::RunConfig&>(), py::arg("config"))
        .def("step", &zm::ZeroMergeCache::step, py::arg("q"), py::arg("k"),
             py::arg("v"))
        .def("step_detailed", &zm::ZeroMergeCache::step_detailed, py::arg("q"),
             py::arg("k"), py::arg("v"))
        .def("ingest_cascade", &zm::ZeroMergeCache::ingest_cascade,
             py::arg("entry"))
        .def("snapshot", &zm::ZeroMergeCache::snapshot)
        .def("segment_sizes", &zm::ZeroMergeCache::segment_sizes)
        .def("size", &zm::ZeroMergeCache::size)
        .def("steps", &zm::ZeroMergeCache::steps)
        .def("merge_log", &zm::ZeroMergeCache::merge_log, py::arg("id"),
             py::return_value_policy::copy);

    py::enum_<zm::PolicyKind::Tag>(m, "PolicyTag")
        .value("full", zm::PolicyKind::Tag::full)
        .value("window", zm::PolicyKind::Tag::window)
        .value("sink_window", zm::PolicyKind::Tag::sink_window)
        .value("heavy_hitter", zm::PolicyKind::Tag::heavy_hitter)
        .value("zeromerge", zm::PolicyKind::Tag::zeromerge);

    py::class_<zm::PolicyKind>(m, "PolicyKind")
        .def_readwrite("tag", &zm::PolicyKind::tag)
        .def_readwrite("window", &zm::PolicyKind::window)
        .def_readwrite("sink", &zm::PolicyKind::sink)
        .def_readwrite("hh_budget", &zm::PolicyKind::hh_budget)
        .def_readwrite("budgets", &zm::PolicyKind::budgets)
        .def_static("full", &zm::PolicyKind::full)
        .def_static("window_only", &zm::PolicyKind::window_only,
                    py::arg("window"))
        .def_static("sink_window", &zm::PolicyKind::sink_window,
                    py::arg("sink"), py::arg("window"))
        .def_static("heavy_hitter", &zm::PolicyKind::heavy_hitter,
                    py::arg("hh_budget"), py::arg("window"))
        .def_static("zeromerge", &zm::PolicyKind::zeromerge,
                    py::arg("budgets"));

    py::class_<zm::CachePolicy>(m, "CachePolicy")
        .def("step", &zm::CachePolicy::step, py::arg("q"), py::arg("k"),
             py::arg("v"))
        .def("snapshot", &zm::CachePolicy::snapshot)
        .def("size", &zm::CachePolicy::size)
        .def("last_uncompressed_mass",
             &zm::CachePolicy::last_uncompressed_mass);

    m.def("make_policy", &zm::make_policy, py::arg("kind"), py::arg("config"));

    py::enum_<zm::TraceKind>(m, "TraceKind")
        .value("gaussian", zm::TraceKind::gaussian)
        .value("heavy_hitter", zm::TraceKind::heavy_hitter)
        .value("external", zm::TraceKind::external);

    py::class_<zm::StepRecord>(m, "StepRecord")
        .def(py::init<>())
        .def_readwrite("q", &zm::StepRecord::q)
        .def_readwrite("k", &zm::StepRecord::k)
        .def_readwrite("v", &zm::StepRecord::v);

    py::class_<zm::Trace>(m, "Trace")
        .def(py::init<>())
        .def_readwrite("head_dim", &zm::Trace::head_dim)
        .def_readwrite("steps", &zm::Trace::steps)
        .def_readwrite("seed", &zm::Trace::seed)
        .def_readwrite("kind", &zm::Trace::kind)
        .def("__len__", [](const zm::Trace& t) { return t.steps.size(); });

    m.def("gen_gaussian", &zm::gen_gaussian, py::arg("steps"),
          py::arg("head_dim"), py::arg("seed"));
    m.def("gen_heavy_hitter", &zm::gen_heavy_hitter, py::arg("steps"),
          py::arg("head_dim"), py::arg("n_hot"), py::arg("gain"),
          py::arg("seed"));
    m.def("write_trace", &zm::write_trace, py::arg("trace"), py::arg("path"));
    m.def("read_trace", &zm::read_trace, py::arg("path"));

    py::class_<zm::StepMetrics>(m, "StepMetrics")
        .def_readonly("step", &zm::StepMetrics::step)
        .def_readonly("cache_entries", &zm::StepMetrics::cache_entries)
        .def_readonly("l2_rel_error", &zm::StepMetrics::l2_rel_error)
        .def_readonly("cosine_sim", &zm::StepMetrics::cosine_sim)
        .def_readonly("uncompressed_mass", &zm::StepMetrics::uncompressed_mass);

    py::class_<zm::MetricsReport::Summary>(m, "ReportSummary")
        .def_readonly("mean_l2_rel_error",
                      &zm::MetricsReport::Summary::mean_l2_rel_error)
        .def_readonly("max_l2_rel_error",
                      &zm::MetricsReport::Summary::max_l2_rel_error)
        .def_readonly("mean_cosine_sim",
                      &zm::MetricsReport::Summary::mean_cosine_sim)
        .def_readonly("peak_cache_entries",
                      &zm::MetricsReport::Summary::peak_cache_entries)
        .def_readonly("step_wall_seconds",
                      &zm::MetricsReport::Summary::step_wall_seconds);

    py::class_<zm::MetricsReport>(m, "MetricsReport")
        .def_readonly("policy", &zm::MetricsReport::policy)
        .def_readonly("label", &zm::MetricsReport::label)
        .def_readonly("per_step", &zm::MetricsReport::per_step)
        .def_readonly("summary", &zm::MetricsReport::summary);

    py::class_<zm::ErrorStats>(m, "ErrorStats")
        .def_readonly("l2_rel", &zm::ErrorStats::l2_rel)
        .def_readonly("cosine", &zm::ErrorStats::cosine)
        .def_readonly("reference_zero", &zm::ErrorStats::reference_zero);

    m.def("attention_error", &zm::attention_error, py::arg("reference"),
          py::arg("approx"));
    m.def("run_policy", &zm::run_policy, py::arg("trace"), py::arg("kind"),
          py::arg("config"));

    py::class_<zm::PreservationStats>(m, "PreservationStats")
        .def_readonly("checks", &zm::PreservationStats::checks)
        .def_readonly("violations", &zm::PreservationStats::violations)
        .def_readonly("worst_margin", &zm::PreservationStats::worst_margin);

    m.def("verify_weight_preservation", &zm::verify_weight_preservation,
          py::arg("trace"), py::arg("config"));
    m.def("run_preservation_campaign", &zm::run_preservation_campaign,
          py::arg("trials"), py::arg("seed"));
    m.def("write_report_csv", &zm::write_report_csv, py::arg("report"),
          py::arg("path"));
    m.def("write_compare_csv",
          [](const std::vector<zm::MetricsReport>& reports,
             const std::filesystem::path& path) {
              zm::write_compare_csv(reports, path);
          },
          py::arg("reports"), py::arg("path"));

    m.attr("preservation_slack") = zm::preservation_slack;
    m.attr("__version__") = "0.1.0";
}
