// Python surface over the core operations: sampler grids, policy
// log-densities, reward normalization, the clipped objective, the
// compression proxy, and checkpoint-driven sampling.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cmrl/checkpoint.hpp"
#include "cmrl/normalize.hpp"
#include "cmrl/rewards.hpp"
#include "cmrl/rollout.hpp"
#include "cmrl/surrogate.hpp"
#include "cmrl/time_grid.hpp"

namespace py = pybind11;

namespace {

cmrl::Tensor to_tensor(const std::vector<double>& values) {
    return cmrl::Tensor::vec(values);
}

}  // namespace

PYBIND11_MODULE(_cmrl, m) {
    m.doc() = "Core operations of the consistency-sampler RL lab";

    m.def(
        "karras_grid",
        [](int horizon, double eps, double T, double rho) {
            return cmrl::karras_grid(horizon, eps, T, rho).points;
        },
        py::arg("horizon"), py::arg("eps") = 0.002, py::arg("T") = 80.0, py::arg("rho") = 7.0,
        "Decreasing time partition with exact endpoints");

    m.def(
        "gaussian_logprob",
        [](const std::vector<double>& mean, double stddev, const std::vector<double>& action) {
            return cmrl::gaussian_logprob(to_tensor(mean), stddev, to_tensor(action));
        },
        py::arg("mean"), py::arg("std"), py::arg("action"));

    m.def(
        "clipped_surrogate",
        [](const std::vector<double>& logp_new, const std::vector<double>& logp_old,
           double advantage, double eps_clip) {
            return cmrl::clipped_surrogate(logp_new, logp_old, advantage, eps_clip);
        },
        py::arg("logp_new"), py::arg("logp_old"), py::arg("advantage"), py::arg("eps_clip"));

    m.def(
        "compress_proxy_size",
        [](const std::vector<double>& pixels, int h, int w, double quant_step) {
            return cmrl::compress_proxy_size(to_tensor(pixels), h, w, quant_step);
        },
        py::arg("pixels"), py::arg("h"), py::arg("w"), py::arg("quant_step") = 16.0,
        "Blockwise DCT entropy size proxy in bytes");

    py::class_<cmrl::ContextStats>(m, "ContextStats")
        .def(py::init<int, int, int>(), py::arg("capacity"), py::arg("min_count"),
             py::arg("num_contexts"))
        .def("normalize", &cmrl::ContextStats::normalize, py::arg("context"), py::arg("reward"),
             py::arg("a_max") = 10.0)
        .def("count", &cmrl::ContextStats::count)
        .def("mean", &cmrl::ContextStats::mean)
        .def("stddev", &cmrl::ContextStats::stddev);

    m.def(
        "multistep_sample",
        [](const std::string& checkpoint_path, int horizon, int context, uint64_t seed,
           double rho) {
            cmrl::Checkpoint ckpt = cmrl::load_checkpoint(checkpoint_path);
            cmrl::ConsistencyModel model = cmrl::consistency_from_checkpoint(ckpt);
            cmrl::TimeGrid grid = cmrl::karras_grid(horizon, model.eps, model.T, rho);
            cmrl::Rng rng(seed);
            return cmrl::multistep_sample(model, grid, context, rng).data;
        },
        py::arg("checkpoint_path"), py::arg("horizon"), py::arg("context"), py::arg("seed"),
        py::arg("rho") = 7.0, "Sample from a saved consistency checkpoint");

    m.def(
        "checkpoint_manifest",
        [](const std::string& path) {
            cmrl::Checkpoint ckpt = cmrl::read_manifest(path);
            py::dict d;
            d["version"] = ckpt.version;
            d["kind"] = ckpt.kind;
            py::dict hyper;
            for (const auto& [key, value] : ckpt.hyper) {
                hyper[py::str(key)] = value;
            }
            d["hyper"] = hyper;
            py::list names;
            for (const auto& name : ckpt.tensor_names) {
                names.append(name);
            }
            d["tensors"] = names;
            return d;
        },
        py::arg("path"), "Read a checkpoint manifest without loading payloads");
}
