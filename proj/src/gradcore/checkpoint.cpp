#include "mccop/gradcore/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace mccop {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t x) { out.write(reinterpret_cast<const char*>(&x), sizeof x); }
void put_f64(std::ostream& out, double x) { out.write(reinterpret_cast<const char*>(&x), sizeof x); }

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t x = 0;
    if (!in.read(reinterpret_cast<char*>(&x), sizeof x)) throw DataError("checkpoint: truncated file");
    return x;
}
double get_f64(std::istream& in) {
    double x = 0;
    if (!in.read(reinterpret_cast<char*>(&x), sizeof x)) throw DataError("checkpoint: truncated file");
    return x;
}

template <typename Derived> void put_dense(std::ostream& out, const Eigen::MatrixBase<Derived>& m) {
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
}

template <typename Derived> void get_dense(std::istream& in, Eigen::MatrixBase<Derived>& m) {
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = get_f64(in);
}

}  // namespace

void write_checkpoint(std::ostream& out, const MlpParameters<double>& params) {
    params.validate();
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    put_u32(out, kCheckpointVersion);
    put_u32(out, params.activation == Activation::softplus ? 0u : 1u);
    put_f64(out, params.beta);
    put_u32(out, params.spectral ? 1u : 0u);
    put_u32(out, static_cast<std::uint32_t>(params.layers.size()));
    for (const auto& layer : params.layers) {
        put_u32(out, static_cast<std::uint32_t>(layer.outputs()));
        put_u32(out, static_cast<std::uint32_t>(layer.inputs()));
    }
    for (const auto& layer : params.layers) {
        put_dense(out, layer.weight);
        put_dense(out, layer.bias);
        put_dense(out, layer.u);
        put_dense(out, layer.v);
    }
    if (!out) throw DataError("checkpoint: write failed");
}

MlpParameters<double> read_checkpoint(std::istream& in) {
    char magic[sizeof kCheckpointMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
        throw DataError("checkpoint: bad magic");
    if (const auto version = get_u32(in); version != kCheckpointVersion)
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    MlpParameters<double> params;
    const auto act = get_u32(in);
    if (act > 1) throw DataError("checkpoint: unknown activation");
    params.activation = act == 0 ? Activation::softplus : Activation::relu;
    params.beta = get_f64(in);
    params.spectral = get_u32(in) != 0;
    const auto n = get_u32(in);
    if (n == 0 || n > 64) throw DataError("checkpoint: implausible layer count");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(n);
    for (auto& s : shapes) {
        s.first = get_u32(in);
        s.second = get_u32(in);
    }
    for (const auto& [outputs, inputs] : shapes) {
        DenseLayer<double> layer;
        layer.weight.resize(outputs, inputs);
        layer.bias.resize(outputs);
        layer.u.resize(outputs);
        layer.v.resize(inputs);
        get_dense(in, layer.weight);
        get_dense(in, layer.bias);
        get_dense(in, layer.u);
        get_dense(in, layer.v);
        params.layers.push_back(std::move(layer));
    }
    try {
        params.validate();
    } catch (const ConfigError& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
    return params;
}

void save_checkpoint(const std::string& path, const MlpParameters<double>& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot open " + path + " for writing");
    write_checkpoint(out, params);
}

MlpParameters<double> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open " + path);
    return read_checkpoint(in);
}

}  // namespace mccop
