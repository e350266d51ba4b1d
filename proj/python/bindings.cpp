#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "planet/cli.hpp"
#include "planet/errors.hpp"
#include "planet/model.hpp"
#include "planet/objectives.hpp"
#include "planet/ppm.hpp"
#include "planet/retrieval.hpp"
#include "planet/signatures.hpp"
#include "planet/synthetic.hpp"
#include "planet/training.hpp"

namespace py = pybind11;
using namespace planet;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const U8Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw DimensionError("expected an H x W x 3 uint8 array");
    const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
    return Image(w, h, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

U8Array from_image(const Image& img) {
    U8Array out({img.height(), img.width(), std::size_t{3}});
    std::copy(img.bytes().begin(), img.bytes().end(), out.mutable_data());
    return out;
}

Tensor to_tensor(const F64Array& a) {
    if (a.ndim() == 1) return Tensor::vector(std::vector<double>(a.data(), a.data() + a.size()));
    if (a.ndim() != 2) throw DimensionError("expected a 1-D or 2-D array");
    return Tensor::matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                          std::vector<double>(a.data(), a.data() + a.size()));
}

F64Array from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    F64Array out(shape);
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

F64Array from_vector(const std::vector<double>& v) {
    F64Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(v.size())});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

sig::SignatureConfig signature_config(std::size_t color_bins, std::size_t struct_bins, std::size_t texture_bins,
                                      double tau_rel) {
    sig::SignatureConfig c{color_bins, struct_bins, texture_bins, tau_rel};
    c.validate();
    return c;
}

eval::SimilarityMatrix similarity(const F64Array& scores, const std::vector<std::size_t>& ground_truth) {
    eval::SimilarityMatrix s;
    s.scores = to_tensor(scores);
    if (s.scores.rank() != 2) throw DimensionError("scores must be a 2-D array");
    s.ground_truth = ground_truth;
    return s;
}

std::array<Tensor, 3> tensor_triple(const std::vector<F64Array>& xs) {
    if (xs.size() != 3) throw DimensionError("expected three arrays (color, structure, texture)");
    return {to_tensor(xs[0]), to_tensor(xs[1]), to_tensor(xs[2])};
}

class Model {
public:
    explicit Model(model::Checkpoint c) : ckpt_(std::move(c)) {}

    F64Array encode_image(const U8Array& img) const { return from_tensor(model::encode_image(to_image(img), ckpt_.params)); }

    py::dict encode_text(const std::string& text) const {
        const auto seq = data::tokenize(text, ckpt_.vocab, ckpt_.params.config().max_len);
        const auto b = model::encode_text(seq, ckpt_.params);
        py::dict d;
        d["text_global"] = from_tensor(b.text_global);
        d["tokens"] = from_tensor(b.tokens);
        d["valid_len"] = b.valid_len;
        return d;
    }

    py::dict project_physical(const std::string& text) const {
        const auto seq = data::tokenize(text, ckpt_.vocab, ckpt_.params.config().max_len);
        const auto b = model::encode_text(seq, ckpt_.params);
        const auto p = model::project_physical(b.tokens, b.valid_len, ckpt_.params);
        py::dict d;
        for (auto br : model::kBranches) {
            const auto k = static_cast<std::size_t>(br);
            d[model::branch_name(br)] = from_tensor(p.descriptors[k]);
            d[(std::string("attention_") + model::branch_name(br)).c_str()] = from_tensor(p.attention[k]);
        }
        return d;
    }

    double tau() const { return ckpt_.params.tau(); }
    double tau_p() const { return ckpt_.params.tau_p(); }
    std::size_t vocab_size() const { return ckpt_.vocab.size(); }
    std::string config() const { return ckpt_.run_config.dump(); }

private:
    model::Checkpoint ckpt_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "C++ core of the planet geo-localization toolkit";

    static py::exception<Error> base_error(m, "PlanetError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(base_error.ptr(), e.what());
        }
    });

    m.def("decode_ppm", [](py::bytes b) {
        const std::string s = b;
        return from_image(data::decode_ppm(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())));
    }, "Decode a binary PPM (P6, maxval 255) into an H x W x 3 uint8 array.");
    m.def("encode_ppm", [](const U8Array& img) {
        const auto bytes = data::encode_ppm(to_image(img));
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    });

    m.def("mine_signature", [](const U8Array& img, std::size_t color_bins, std::size_t struct_bins,
                               std::size_t texture_bins, double tau_rel) {
        const auto s = sig::mine_signature(to_image(img), signature_config(color_bins, struct_bins, texture_bins, tau_rel));
        py::dict d;
        d["color"] = from_vector(s.color);
        d["structure"] = from_vector(s.structure);
        d["texture"] = from_vector(s.texture);
        d["combined"] = from_vector(s.combined);
        return d;
    }, py::arg("image"), py::arg("color_bins") = 16, py::arg("struct_bins") = 18, py::arg("texture_bins") = 16,
          py::arg("tau_rel") = 0.15);

    m.def("info_nce", [](const F64Array& sim, double tau) { return obj::info_nce(to_tensor(sim), tau); });
    m.def("itc_loss", [](const F64Array& v, const F64Array& t, double tau, bool symmetric) {
        return obj::itc_loss(to_tensor(v), to_tensor(t), tau, symmetric);
    }, py::arg("V"), py::arg("T"), py::arg("tau"), py::arg("symmetric") = false);
    m.def("phy_loss", [](const std::vector<F64Array>& descriptors, const std::vector<F64Array>& signatures,
                         double tau_p, std::array<double, 3> weights) {
        const auto r = obj::phy_loss(tensor_triple(descriptors), tensor_triple(signatures), tau_p, weights);
        return py::make_tuple(r.total, r.branch);
    }, py::arg("descriptors"), py::arg("signatures"), py::arg("tau_p"),
          py::arg("weights") = std::array<double, 3>{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    m.def("total_loss", [](double itc, double phy, double lambda) { return obj::total_loss(itc, phy, lambda); });
    m.def("cosine_lr", &train::cosine_lr, py::arg("step"), py::arg("total_steps"), py::arg("lr0"), py::arg("lr_min") = 0.0);

    m.def("similarity_matrix", [](const F64Array& text, const F64Array& images) {
        return from_tensor(eval::similarity_matrix(to_tensor(text), to_tensor(images)));
    });
    m.def("recall_at_k", [](const F64Array& scores, const std::vector<std::size_t>& gt, std::size_t k) {
        return eval::recall_at_k(similarity(scores, gt), k);
    }, py::arg("scores"), py::arg("ground_truth"), py::arg("k"));
    m.def("localization_at", [](const F64Array& scores, const std::vector<std::size_t>& gt,
                                const std::vector<std::pair<double, double>>& coords, double meters) {
        std::vector<eval::GeoPoint> pts;
        for (const auto& [lat, lon] : coords) pts.push_back({lat, lon});
        return eval::localization_at(similarity(scores, gt), pts, meters);
    }, py::arg("scores"), py::arg("ground_truth"), py::arg("coords"), py::arg("meters") = 150.0);
    m.def("haversine", py::overload_cast<double, double, double, double>(&eval::haversine));

    m.def("make_synthetic", [](std::size_t n, std::uint64_t seed) {
        const auto c = data::make_synthetic(n, seed);
        py::list out;
        for (std::size_t i = 0; i < c.samples.size(); ++i) {
            const auto& s = c.samples[i];
            py::dict d;
            d["id"] = s.id;
            d["text"] = s.text;
            d["lat"] = s.lat;
            d["lon"] = s.lon;
            d["region"] = s.region;
            d["split"] = data::split_name(*s.split);
            d["image"] = from_image(c.images[i]);
            out.append(d);
        }
        return out;
    }, py::arg("n"), py::arg("seed") = 0);

    py::class_<Model>(m, "Model")
        .def("encode_image", &Model::encode_image)
        .def("encode_text", &Model::encode_text)
        .def("project_physical", &Model::project_physical)
        .def_property_readonly("tau", &Model::tau)
        .def_property_readonly("tau_p", &Model::tau_p)
        .def_property_readonly("vocab_size", &Model::vocab_size)
        .def_property_readonly("config_json", &Model::config);
    m.def("load_checkpoint", [](const std::filesystem::path& p) { return Model(model::load_checkpoint(p)); });

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        std::vector<std::string> full{"planet"};
        full.insert(full.end(), args.begin(), args.end());
        const int code = cli::run(full, out, err);
        return py::make_tuple(code, out.str(), err.str());
    }, "Run a command-line invocation in-process; returns (exit code, stdout, stderr).");
}
