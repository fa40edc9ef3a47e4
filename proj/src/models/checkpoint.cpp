#include "mvhedge/models/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include "mvhedge/detail/numio.hpp"

namespace mvhedge {

namespace {

constexpr char kMagic[4] = {'M', 'V', 'H', 'G'};
constexpr std::uint8_t kVersion = 1;

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

/// Sequential reader that tracks its offset for format_error reporting.
class Reader {
public:
    Reader(std::string bytes, std::string path)
        : bytes_(std::move(bytes)), path_(std::move(path)) {}

    std::size_t offset() const { return pos_; }
    std::size_t size() const { return bytes_.size(); }
    const std::string& bytes() const { return bytes_; }

    void require(std::size_t n, const char* what) {
        if (pos_ + n > bytes_.size())
            throw format_error("checkpoint truncated while reading " + std::string(what) + ": " +
                                   path_,
                               pos_);
    }

    std::uint8_t u8(const char* what) {
        require(1, what);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }

    std::uint32_t u32(const char* what) {
        require(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64(const char* what) {
        require(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

    std::string str(std::size_t n, const char* what) {
        require(n, what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    [[noreturn]] void fail(const std::string& msg) { throw format_error(msg + ": " + path_, pos_); }

private:
    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

std::string join_doubles(std::span<const double> values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += detail::format_double(values[i]);
    }
    return out;
}

std::vector<double> split_doubles(const std::string& text) {
    std::vector<double> out;
    if (text.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = text.find(',', start);
        const std::string_view cell{text.data() + start,
                                    (comma == std::string::npos ? text.size() : comma) - start};
        const auto v = detail::parse_double(cell);
        if (!v) throw format_error("unparseable numeric metadata '" + std::string(cell) + "'", 0);
        out.push_back(*v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

void write_file(const std::string& path, const Metadata& meta, std::span<const double> params) {
    std::string body;
    put_u32(body, static_cast<std::uint32_t>(meta.size()));
    for (const auto& [key, value] : meta) {
        put_u32(body, static_cast<std::uint32_t>(key.size()));
        body += key;
        put_u32(body, static_cast<std::uint32_t>(value.size()));
        body += value;
    }
    put_u64(body, params.size());
    for (double p : params) put_f64(body, p);

    std::string payload;
    payload.push_back(static_cast<char>(kVersion));
    payload += body;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write checkpoint: " + path);
    out.write(kMagic, 4);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    std::string tail;
    put_u64(tail, fnv1a(payload));
    out.write(tail.data(), static_cast<std::streamsize>(tail.size()));
    if (!out) throw io_error("write failed: " + path);
}

Metadata common_metadata(const char* model, ModelVariant variant, OptionKind kind) {
    Metadata meta;
    meta.emplace_back("model", model);
    meta.emplace_back("variant", to_string(variant));
    meta.emplace_back("kind", to_string(kind));
    meta.emplace_back("features", feature_names(variant, kind));
    return meta;
}

void append_feature_stats(Metadata& meta, const FeatureStats& stats) {
    meta.emplace_back("feature_mean", join_doubles(stats.mean));
    meta.emplace_back("feature_std", join_doubles(stats.std));
}

std::string lookup(const Metadata& meta, const std::string& key, Reader& r) {
    for (const auto& [k, v] : meta)
        if (k == key) return v;
    r.fail("checkpoint metadata is missing key '" + key + "'");
}

}  // namespace

void save_checkpoint(const FnnHedgeModel& model, const std::string& path) {
    Metadata meta = common_metadata("fnn", model.variant, model.kind);
    std::string dims;
    std::size_t bn_index = 0;
    for (const auto& layer : model.net.layers) {
        if (const auto* dense = std::get_if<nn::DenseLayer>(&layer)) {
            if (dims.empty()) dims = std::to_string(dense->in);
            dims += "," + std::to_string(dense->out);
        } else if (const auto* bn = std::get_if<nn::BatchNormLayer>(&layer)) {
            const std::string tag = std::to_string(bn_index++);
            meta.emplace_back("bn_running_mean." + tag, join_doubles(bn->running_mean));
            meta.emplace_back("bn_running_var." + tag, join_doubles(bn->running_var));
        }
    }
    meta.emplace_back("layer_dims", dims);
    meta.emplace_back("sigmoid_output", model.sigmoid_output ? "1" : "0");
    append_feature_stats(meta, model.feature_stats);

    std::vector<double> params;
    for (const auto* slot : nn::trainable_params(model.net))
        params.insert(params.end(), slot->begin(), slot->end());
    write_file(path, meta, params);
}

void save_checkpoint(const GruHedgeModel& model, const std::string& path) {
    Metadata meta = common_metadata("gru", ModelVariant::DNNGRU, model.kind);
    meta.emplace_back("hidden_size", std::to_string(model.hidden));
    meta.emplace_back("sequence_length", std::to_string(kSequenceLength));
    meta.emplace_back("sigmoid_output", model.sigmoid_output ? "1" : "0");
    append_feature_stats(meta, model.feature_stats);

    std::vector<double> params;
    for (const auto* slot : trainable_params(model))
        params.insert(params.end(), slot->begin(), slot->end());
    write_file(path, meta, params);
}

void save_checkpoint(const HwModel& model, const std::string& path) {
    Metadata meta = common_metadata("hw", ModelVariant::HW, model.kind);
    const double params[3] = {model.coef.a, model.coef.b, model.coef.c};
    write_file(path, meta, params);
}

void save_checkpoint(const BsBaselineModel& model, const std::string& path) {
    Metadata meta = common_metadata("bs", ModelVariant::BSBaseline, model.kind);
    write_file(path, meta, {});
}

void save_checkpoint(const HedgeModelAny& model, const std::string& path) {
    std::visit([&](const auto& m) { save_checkpoint(m, path); }, model);
}

namespace {

std::vector<double> take(std::span<const double>& params, std::size_t n, Reader& r) {
    if (params.size() < n) r.fail("parameter block shorter than the layer dimensions require");
    std::vector<double> out(params.begin(), params.begin() + n);
    params = params.subspan(n);
    return out;
}

HedgeModelAny load_fnn(const Metadata& meta, std::span<const double> params, Reader& r) {
    FnnHedgeModel model;
    const auto variant = parse_variant(lookup(meta, "variant", r));
    if (!variant) r.fail("unknown variant in checkpoint");
    model.variant = *variant;
    model.kind = lookup(meta, "kind", r) == "put" ? OptionKind::Put : OptionKind::Call;
    model.sigmoid_output = lookup(meta, "sigmoid_output", r) == "1";
    model.feature_stats.mean = split_doubles(lookup(meta, "feature_mean", r));
    model.feature_stats.std = split_doubles(lookup(meta, "feature_std", r));

    const auto dims_text = lookup(meta, "layer_dims", r);
    std::vector<std::size_t> dims;
    std::stringstream ss(dims_text);
    std::string cell;
    while (std::getline(ss, cell, ',')) dims.push_back(std::stoul(cell));
    if (dims.size() < 2) r.fail("layer_dims must list at least input and output sizes");

    std::size_t bn_index = 0;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        nn::DenseLayer dense;
        dense.in = dims[i];
        dense.out = dims[i + 1];
        dense.activation = nn::Activation::Identity;
        dense.weights = take(params, dense.in * dense.out, r);
        dense.bias = take(params, dense.out, r);
        const bool hidden = i + 2 < dims.size();
        model.net.layers.emplace_back(std::move(dense));
        if (hidden) {
            nn::BatchNormLayer bn(dims[i + 1]);
            bn.gamma = take(params, dims[i + 1], r);
            bn.beta = take(params, dims[i + 1], r);
            const std::string tag = std::to_string(bn_index++);
            bn.running_mean = split_doubles(lookup(meta, "bn_running_mean." + tag, r));
            bn.running_var = split_doubles(lookup(meta, "bn_running_var." + tag, r));
            if (bn.running_mean.size() != dims[i + 1] || bn.running_var.size() != dims[i + 1])
                r.fail("batch-norm running statistics have the wrong width");
            model.net.layers.emplace_back(std::move(bn));
            model.net.layers.emplace_back(nn::ActivationLayer{nn::Activation::ReLU});
        }
    }
    if (!params.empty()) r.fail("parameter block longer than the layer dimensions require");
    return model;
}

HedgeModelAny load_gru(const Metadata& meta, std::span<const double> params, Reader& r) {
    GruHedgeModel model;
    model.kind = lookup(meta, "kind", r) == "put" ? OptionKind::Put : OptionKind::Call;
    model.hidden = std::stoul(lookup(meta, "hidden_size", r));
    model.sigmoid_output = lookup(meta, "sigmoid_output", r) == "1";
    model.feature_stats.mean = split_doubles(lookup(meta, "feature_mean", r));
    model.feature_stats.std = split_doubles(lookup(meta, "feature_std", r));

    const std::size_t h = model.hidden;
    model.w_z = take(params, h, r);
    model.u_z = take(params, h * h, r);
    model.b_z = take(params, h, r);
    model.w_r = take(params, h, r);
    model.u_r = take(params, h * h, r);
    model.b_r = take(params, h, r);
    model.w_h = take(params, h, r);
    model.u_h = take(params, h * h, r);
    model.b_h = take(params, h, r);
    model.head.in = h + 2;
    model.head.out = 1;
    model.head.activation = nn::Activation::Identity;
    model.head.weights = take(params, h + 2, r);
    model.head.bias = take(params, 1, r);
    if (!params.empty()) r.fail("parameter block longer than the GRU layout requires");
    return model;
}

}  // namespace

HedgeModelAny load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open checkpoint: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    Reader r(buffer.str(), path);

    const std::string magic = r.str(4, "magic");
    if (magic != std::string(kMagic, 4))
        throw format_error("bad checkpoint magic (expected MVHG): " + path, 0);
    if (r.size() < 4 + 1 + 8) r.fail("checkpoint too small to contain version and checksum");

    // checksum covers [version byte, end - 8)
    const std::string payload = r.bytes().substr(4, r.size() - 4 - 8);
    const std::uint8_t version = r.u8("version");
    if (version != kVersion)
        throw format_error("unsupported checkpoint version " + std::to_string(version) + ": " + path,
                           4);

    Metadata meta;
    const std::uint32_t pairs = r.u32("metadata count");
    for (std::uint32_t i = 0; i < pairs; ++i) {
        const auto klen = r.u32("metadata key length");
        std::string key = r.str(klen, "metadata key");
        const auto vlen = r.u32("metadata value length");
        std::string value = r.str(vlen, "metadata value");
        meta.emplace_back(std::move(key), std::move(value));
    }

    const std::uint64_t n_params = r.u64("parameter count");
    std::vector<double> params;
    params.reserve(n_params);
    for (std::uint64_t i = 0; i < n_params; ++i) params.push_back(r.f64("parameter"));

    const std::uint64_t stored_checksum = r.u64("checksum");
    if (r.offset() != r.size()) r.fail("trailing bytes after checksum");
    if (fnv1a(payload) != stored_checksum) r.fail("checksum mismatch");

    const std::string model = lookup(meta, "model", r);
    if (model == "fnn") return load_fnn(meta, params, r);
    if (model == "gru") return load_gru(meta, params, r);
    if (model == "hw") {
        if (params.size() != 3) r.fail("hw checkpoint must carry exactly 3 coefficients");
        HwModel hw;
        hw.kind = lookup(meta, "kind", r) == "put" ? OptionKind::Put : OptionKind::Call;
        hw.coef = HwCoefficients{params[0], params[1], params[2]};
        return hw;
    }
    if (model == "bs") {
        BsBaselineModel bs;
        bs.kind = lookup(meta, "kind", r) == "put" ? OptionKind::Put : OptionKind::Call;
        return bs;
    }
    r.fail("unknown model type '" + model + "'");
}

OptionKind model_kind(const HedgeModelAny& model) {
    return std::visit([](const auto& m) { return m.kind; }, model);
}

ModelVariant model_variant(const HedgeModelAny& model) {
    return std::visit(
        [](const auto& m) -> ModelVariant {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, FnnHedgeModel>)
                return m.variant;
            else if constexpr (std::is_same_v<T, GruHedgeModel>)
                return ModelVariant::DNNGRU;
            else if constexpr (std::is_same_v<T, HwModel>)
                return ModelVariant::HW;
            else
                return ModelVariant::BSBaseline;
        },
        model);
}

void expect_kind(const HedgeModelAny& model, OptionKind kind) {
    if (model_kind(model) != kind)
        throw config_error(std::string("checkpoint was trained for ") +
                           to_string(model_kind(model)) + " options but " + to_string(kind) +
                           " was requested");
}

}  // namespace mvhedge
