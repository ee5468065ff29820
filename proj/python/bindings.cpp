#include <map>
#include <sstream>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "secvm/bounds.hpp"
#include "secvm/crypto.hpp"
#include "secvm/error.hpp"
#include "secvm/scenario.hpp"
#include "secvm/svm.hpp"
#include "secvm/synthetic.hpp"

namespace py = pybind11;
using namespace secvm;

namespace {

using PySparse = std::map<std::uint32_t, std::int64_t>;

SparseVector to_sparse(const PySparse& d) {
  std::vector<SparseEntry> e;
  e.reserve(d.size());
  for (auto [i, v] : d) e.push_back({i, v});
  return SparseVector::from_entries(std::move(e));
}

PySparse from_sparse(const SparseVector& v) {
  PySparse d;
  for (const auto& e : v.entries()) d.emplace(e.index, e.value);
  return d;
}

HashConfig make_hash(std::uint32_t bins, const std::string& seed_hex) {
  HashConfig h;
  h.num_bins = bins;
  if (!seed_hex.empty()) h.seed = parse_hash_seed(seed_hex);
  h.validate();
  return h;
}

TrainConfig train_config(double lambda, double cpos, double cneg, std::uint32_t iterations, std::uint32_t avg_window) {
  TrainConfig c;
  c.lambda = lambda;
  c.class_weight_pos = cpos;
  c.class_weight_neg = cneg;
  c.num_iterations = iterations;
  c.avg_window = avg_window;
  c.validate();
  return c;
}

py::object opt(const std::optional<double>& x) { return x ? py::cast(*x) : py::none(); }

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["accuracy"] = opt(m.accuracy);
  d["recall_pos"] = opt(m.recall_pos);
  d["recall_neg"] = opt(m.recall_neg);
  d["precision_pos"] = opt(m.precision_pos);
  d["precision_neg"] = opt(m.precision_neg);
  d["share_pos"] = opt(m.share_pos());
  return d;
}

py::dict logprob_dict(const LogProb& p) {
  py::dict d;
  d["log10"] = p.zero ? py::none() : py::cast(p.log10);
  d["zero"] = p.zero;
  d["scientific"] = p.scientific();
  d["value"] = p.value();
  return d;
}

}  // namespace

PYBIND11_MODULE(_secvm, m) {
  m.doc() = "secvm core bindings";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", data.ptr());
  py::register_exception<IoError>(m, "IoError", data.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<DecodeError>(m, "DecodeError", base.ptr());
  py::register_exception<SchedulingError>(m, "SchedulingError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<InvariantError>(m, "InvariantError", base.ptr());

  // ---- data
  py::class_<Dataset>(m, "Dataset")
      .def(py::init<>())
      .def("__len__", &Dataset::size)
      .def_readwrite("num_raw_features", &Dataset::num_raw_features)
      .def_property_readonly("labels",
                             [](const Dataset& d) {
                               std::vector<int> y;
                               for (const auto& s : d.samples) y.push_back(to_int(s.label));
                               return y;
                             })
      .def_property_readonly("features",
                             [](const Dataset& d) {
                               std::vector<PySparse> x;
                               for (const auto& s : d.samples) x.push_back(from_sparse(s.features));
                               return x;
                             })
      .def("append",
           [](Dataset& d, int label, const PySparse& x) {
             d.samples.push_back({to_sparse(x), label_from_int(label)});
             d.num_raw_features = std::max<std::uint64_t>(d.num_raw_features, d.samples.back().features.extent());
           },
           py::arg("label"), py::arg("features"))
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def("parse_dataset", &parse_dataset, py::arg("text"));
  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("serialize_dataset", &serialize_dataset, py::arg("dataset"));
  m.def("split_train_test", &split_train_test, py::arg("dataset"), py::arg("p"), py::arg("seed"));
  m.def(
      "generate_synthetic",
      [](const std::string& spec_json, std::uint64_t seed) {
        return generate_synthetic(synthetic_spec_from_json(nlohmann::json::parse(spec_json)), seed);
      },
      py::arg("spec_json"), py::arg("seed"));

  // ---- hashing
  m.def(
      "hash_index",
      [](std::uint64_t raw, std::uint32_t bins, const std::string& seed) { return hash_index(raw, make_hash(bins, seed)); },
      py::arg("raw_index"), py::arg("bins"), py::arg("hash_seed") = "");
  m.def(
      "hash_vector",
      [](const PySparse& x, std::uint32_t bins, const std::string& seed) {
        return from_sparse(hash_vector(to_sparse(x), make_hash(bins, seed)));
      },
      py::arg("x"), py::arg("bins"), py::arg("hash_seed") = "");
  m.def("siphash24", [](std::uint64_t k0, std::uint64_t k1, const py::bytes& msg) {
    const std::string s = msg;
    return siphash24(k0, k1, {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  });

  // ---- training
  m.def(
      "local_update",
      [](const std::vector<double>& w, const PySparse& x, int y) {
        return from_sparse(local_update(w, to_sparse(x), label_from_int(y)));
      },
      py::arg("w"), py::arg("x"), py::arg("label"));
  m.def(
      "predict", [](const std::vector<double>& w, const PySparse& x) { return to_int(predict(w, to_sparse(x))); },
      py::arg("w"), py::arg("x"));
  m.def(
      "train_centralized",
      [](const Dataset& train, const Dataset& test, double lambda, double cpos, double cneg, std::uint32_t iterations,
         std::uint32_t avg_window, std::uint32_t bins, const std::string& seed) {
        const TrainConfig cfg = train_config(lambda, cpos, cneg, iterations, avg_window);
        std::optional<HashConfig> h;
        if (bins > 0) h = make_hash(bins, seed);
        Trajectory t;
        {
          py::gil_scoped_release nogil;
          t = train_centralized(train, test, cfg, h);
        }
        py::list records;
        for (const auto& r : t.records) {
          py::dict d;
          d["iteration"] = r.iteration;
          d["loss"] = r.loss;
          d["packages"] = r.packages;
          d["averaged"] = metrics_dict(r.averaged);
          d["raw"] = metrics_dict(r.raw);
          records.append(d);
        }
        std::ostringstream csv;
        write_trajectory_csv(csv, t);
        py::dict out;
        out["weights"] = t.final_state.w;
        out["records"] = records;
        out["trajectory_csv"] = csv.str();
        return out;
      },
      py::arg("train"), py::arg("test"), py::arg("lambda_") = 1e-4, py::arg("class_weight_pos") = 1.0,
      py::arg("class_weight_neg") = 1.0, py::arg("iterations") = 100, py::arg("avg_window") = 2, py::arg("bins") = 0,
      py::arg("hash_seed") = "");

  // ---- simulation
  m.def(
      "simulate",
      [](const std::string& scenario_json, const std::filesystem::path& base_dir) {
        const LoadedScenario ls = scenario_from_json(nlohmann::json::parse(scenario_json), base_dir);
        SimResult r;
        {
          py::gil_scoped_release nogil;
          r = run_experiment(ls.scenario);
        }
        std::ostringstream sim, events;
        write_simulation_csv(sim, r);
        r.log.write_csv(events);
        py::list weights;
        for (const auto& it : r.iterations) weights.append(py::cast(it.weights));
        py::dict out;
        out["final_weights"] = r.final_model.w;
        out["weights"] = weights;
        out["train_clients"] = r.train_clients;
        out["test_clients"] = r.test_clients;
        out["verified"] = r.detection.verified;
        out["detections"] = r.detection.detections;
        out["detection_rate"] = r.detection.rate();
        out["simulation_csv"] = sim.str();
        out["events_csv"] = events.str();
        out["resolved"] = ls.resolved.dump();
        return out;
      },
      py::arg("scenario_json"), py::arg("base_dir") = std::filesystem::path{});

  // ---- protocol
  m.def(
      "packetize",
      [](const PySparse& g, std::uint32_t exp, std::uint32_t iter) {
        std::vector<std::pair<std::uint32_t, int>> out;
        for (const auto& p : packetize(to_sparse(g), exp, iter)) out.emplace_back(p.feature_index, p.sign);
        return out;
      },
      py::arg("g"), py::arg("experiment_id"), py::arg("iteration"));
  m.def(
      "reaggregate",
      [](const std::vector<std::pair<std::uint32_t, int>>& pk) {
        std::vector<UpdatePackage> v;
        for (auto [i, s] : pk) v.push_back({0, 0, i, static_cast<std::int8_t>(s)});
        return from_sparse(reaggregate(v));
      },
      py::arg("packages"));
  m.def(
      "encode_package",
      [](std::uint32_t exp, std::uint32_t iter, std::uint32_t index, int sign) {
        const auto b = encode_package({exp, iter, index, static_cast<std::int8_t>(sign)});
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      },
      py::arg("experiment_id"), py::arg("iteration"), py::arg("feature_index"), py::arg("sign"));
  m.def("decode_package", [](const py::bytes& raw) {
    const std::string s = raw;
    const auto p = decode_package({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
    return py::make_tuple(p.experiment_id, p.iteration, p.feature_index, static_cast<int>(p.sign));
  });
  m.def(
      "descriptor_digest",
      [](const std::string& descriptor_json) {
        return digest_hex(descriptor_digest(descriptor_from_json(nlohmann::json::parse(descriptor_json))));
      },
      py::arg("descriptor_json"));

  // ---- bounds
  m.def("lemma1a_bound", [](std::uint64_t mm, std::uint64_t n) { return logprob_dict(lemma1a_bound(mm, n)); },
        py::arg("m"), py::arg("n"));
  m.def(
      "lemma1b_bound",
      [](std::uint64_t mm, std::uint64_t n, std::uint64_t k) { return logprob_dict(lemma1b_bound(mm, n, k)); },
      py::arg("m"), py::arg("n"), py::arg("k"));
  m.def(
      "lemma2_bound",
      [](std::uint64_t mm, std::uint64_t n, std::uint64_t k) {
        const auto r = lemma2_bound(mm, n, k);
        py::dict d;
        d["applicable"] = r.applicable;
        d["complement"] = logprob_dict(r.complement);
        d["lower_bound"] = r.lower_bound;
        return d;
      },
      py::arg("m"), py::arg("n"), py::arg("k"));
  m.def(
      "lemma3_bound",
      [](std::uint64_t M, std::uint64_t F, std::uint64_t d, std::uint64_t K) {
        return logprob_dict(lemma3_bound(M, F, d, K));
      },
      py::arg("M"), py::arg("F"), py::arg("d"), py::arg("K") = 1);
  m.def(
      "collision_oracle",
      [](std::uint64_t mm, std::uint64_t n, const std::string& mode, std::uint64_t trials, std::uint64_t seed) {
        OracleMode md;
        if (mode == "exhaustive") md = Exhaustive{};
        else if (mode == "partition") md = Partition{};
        else if (mode == "monte_carlo") md = MonteCarlo{trials, seed};
        else throw ConfigError("mode: expected exhaustive, partition or monte_carlo");
        const auto r = collision_oracle(mm, n, md);
        py::dict d;
        d["exact"] = r.exact;
        d["p_some_alone"] = r.p_some_alone;
        d["p_first_k_alone"] = r.p_first_k_alone;
        d["p_min_binmates"] = r.p_min_binmates;
        return d;
      },
      py::arg("m"), py::arg("n"), py::arg("mode") = "partition", py::arg("trials") = 100000, py::arg("seed") = 0);
  m.def(
      "plan_bins",
      [](std::uint64_t mm, const std::string& target, const std::string& ceiling, std::uint64_t k) {
        const double l = parse_log10_probability(ceiling);
        PlanTarget t;
        if (target == "max_p1") t = MaxP1{l};
        else if (target == "max_p2") t = MaxP2{k, l};
        else if (target == "min_collisions") t = MinCollisions{k, l};
        else throw ConfigError("target: expected max_p1, max_p2 or min_collisions");
        const auto r = plan_bins(mm, t);
        py::dict d;
        d["n"] = r.n;
        d["at_n"] = logprob_dict(r.at_n);
        d["at_n_plus_1"] = logprob_dict(r.at_n_plus_1);
        return d;
      },
      py::arg("m"), py::arg("target"), py::arg("ceiling"), py::arg("k") = 1);
}
