#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "econ/app.hpp"
#include "econ/core.hpp"
#include "econ/datapipe.hpp"
#include "econ/diversity.hpp"
#include "econ/errors.hpp"
#include "econ/experiment.hpp"
#include "econ/learn.hpp"
#include "econ/orchestrate.hpp"

namespace py = pybind11;
using namespace econ;

namespace {

Attempt MakeAttempt(std::int64_t initial, std::vector<std::int64_t> refinements) {
  Attempt a;
  a.initial_tokens = initial;
  a.refinement_tokens = std::move(refinements);
  return a;
}

}  // namespace

PYBIND11_MODULE(_econ, m) {
  m.doc() = "Economical test-time scaling engine";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<OverflowError>(m, "TokenOverflowError", PyExc_OverflowError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);

  m.def("attempt_cost",
        [](std::int64_t initial, std::vector<std::int64_t> refinements) {
          return AttemptCost(MakeAttempt(initial, std::move(refinements)));
        },
        py::arg("initial_tokens"), py::arg("refinement_tokens") = std::vector<std::int64_t>{});

  m.def("total_sampling_cost",
        [](const std::vector<std::pair<std::int64_t, std::vector<std::int64_t>>>& passes) {
          std::vector<Attempt> attempts;
          for (const auto& [initial, refinements] : passes) attempts.push_back(MakeAttempt(initial, refinements));
          const SamplingCost cost = TotalSamplingCost(attempts);
          return py::dict(py::arg("total_tokens") = cost.total_tokens,
                          py::arg("per_pass") = cost.per_pass, py::arg("passes") = cost.passes);
        },
        py::arg("passes"));

  m.def("pass_at_k", &PassAtKValue, py::arg("n"), py::arg("c"), py::arg("k"));

  m.def("dpo_loss",
        [](const std::vector<std::tuple<double, double, double, double>>& items, double beta) {
          std::vector<learn::DpoBatchItem> batch;
          for (const auto& [w, l, wr, lr] : items) batch.push_back({w, l, wr, lr, beta});
          return learn::DpoLoss(batch);
        },
        py::arg("items"), py::arg("beta") = learn::kDefaultBeta);

  m.def("dpo_grad",
        [](double lpw_theta, double lpl_theta, double lpw_ref, double lpl_ref, double beta) {
          const auto g = learn::DpoGrad({lpw_theta, lpl_theta, lpw_ref, lpl_ref, beta});
          return std::make_pair(g.d_lpw_theta, g.d_lpl_theta);
        },
        py::arg("lpw_theta"), py::arg("lpl_theta"), py::arg("lpw_ref"), py::arg("lpl_ref"),
        py::arg("beta") = learn::kDefaultBeta);

  m.def("allocate_budget",
        [](int k, int n) { return orchestrate::AllocateBudget(k, n).per_head; }, py::arg("k"),
        py::arg("n"));

  m.def("pdc_curve",
        [](const std::vector<std::vector<std::string>>& attempts, std::vector<std::size_t> sizes,
           std::size_t prefix_len, std::size_t ngram, std::size_t reference_size) {
          diversity::PrefixProfile profile;
          profile.problem_id = "python";
          profile.attempts = attempts;
          profile.prefix_len = prefix_len;
          profile.ngram = ngram;
          profile.reference_size = reference_size;
          return diversity::PdcCurve(profile, sizes).coverage;
        },
        py::arg("attempts"), py::arg("sample_sizes"), py::arg("prefix_len") = 20,
        py::arg("ngram") = 3, py::arg("reference_size") = 512);

  m.def("partition_bins",
        [](const std::vector<std::pair<std::string, int>>& counts, int n) {
          std::vector<datapipe::DifficultyProfile> profiles;
          for (const auto& [id, c] : counts) profiles.push_back({id, c, 0});
          std::vector<std::vector<std::string>> out;
          for (const auto& bin : datapipe::PartitionBins(profiles, n)) {
            auto& ids = out.emplace_back();
            for (const auto& p : bin) ids.push_back(p.problem_id);
          }
          return out;
        },
        py::arg("counts"), py::arg("n"));

  m.def("reproduce_table2",
        [](std::uint64_t seed) {
          experiment::Table2Config config;
          config.seed = seed;
          const auto r = experiment::ReproduceTable2Shape(config);
          py::dict rows;
          for (const auto* row : {&r.noncot, &r.dynamic, &r.full_cot}) {
            rows[py::str(row->label)] =
                py::dict(py::arg("accuracy") = row->accuracy,
                         py::arg("mean_tokens") = row->mean_tokens, py::arg("cot_rate") = row->cot_rate);
          }
          return py::dict(py::arg("rows") = rows, py::arg("token_ratio") = r.token_ratio,
                          py::arg("passed") = r.Pass());
        },
        py::arg("seed") = 0);

  m.def("run_cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          int code;
          {
            py::gil_scoped_release release;
            code = RunApp(args, out, err);
          }
          return std::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
