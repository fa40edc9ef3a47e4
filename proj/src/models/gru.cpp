#include "mvhedge/models/gru.hpp"

#include <cmath>

namespace mvhedge {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

using nn::Matrix;

void add_bias(Matrix& m, const std::vector<double>& bias) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* row = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols(); ++j) row[j] += bias[i];
    }
}

void map_sigmoid(Matrix& m) {
    for (double& v : m.data()) v = sigmoid(v);
}

void map_tanh(Matrix& m) {
    for (double& v : m.data()) v = std::tanh(v);
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] *= b.data()[i];
    return out;
}

void row_sums_into(const Matrix& m, std::vector<double>& out) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row_ptr(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) acc += row[j];
        out[i] += acc;
    }
}

}  // namespace

GruHedgeModel make_gru(OptionKind kind, std::uint64_t seed, std::size_t hidden) {
    GruHedgeModel model;
    model.kind = kind;
    model.hidden = hidden;
    Rng rng(seed);
    const double wb = 1.0;  // input fan-in is the scalar sentiment
    const double ub = 1.0 / std::sqrt(static_cast<double>(hidden));
    auto init = [&](std::vector<double>& w, std::vector<double>& u, std::vector<double>& b) {
        w.resize(hidden);
        for (auto& v : w) v = rng.uniform(-wb, wb);
        u.resize(hidden * hidden);
        for (auto& v : u) v = rng.uniform(-ub, ub);
        b.assign(hidden, 0.0);
    };
    init(model.w_z, model.u_z, model.b_z);
    init(model.w_r, model.u_r, model.b_r);
    init(model.w_h, model.u_h, model.b_h);
    model.head = nn::xavier_init(hidden + 2, 1, rng, nn::Activation::Identity);
    model.feature_stats.mean.assign(2, 0.0);
    model.feature_stats.std.assign(2, 1.0);
    return model;
}

std::vector<double> gru_cell_step(const GruHedgeModel& model, double x_t,
                                  std::span<const double> h_prev) {
    const std::size_t h = model.hidden;
    if (h_prev.size() != h) throw contract_error("gru_cell_step: hidden size mismatch");
    std::vector<double> z(h), r(h), hhat(h), out(h);
    for (std::size_t i = 0; i < h; ++i) {
        double sz = model.w_z[i] * x_t + model.b_z[i];
        double sr = model.w_r[i] * x_t + model.b_r[i];
        for (std::size_t p = 0; p < h; ++p) {
            sz += model.u_z[i * h + p] * h_prev[p];
            sr += model.u_r[i * h + p] * h_prev[p];
        }
        z[i] = sigmoid(sz);
        r[i] = sigmoid(sr);
    }
    for (std::size_t i = 0; i < h; ++i) {
        double sh = model.w_h[i] * x_t + model.b_h[i];
        for (std::size_t p = 0; p < h; ++p) sh += model.u_h[i * h + p] * (r[p] * h_prev[p]);
        hhat[i] = std::tanh(sh);
        out[i] = (1.0 - z[i]) * h_prev[i] + z[i] * hhat[i];
    }
    return out;
}

nn::Matrix gru_forward(const GruHedgeModel& model, const Matrix& histories,
                       const Matrix& contract, GruForwardCache* cache) {
    const std::size_t h = model.hidden;
    const std::size_t steps = histories.rows();
    const std::size_t batch = histories.cols();
    if (contract.cols() != batch) throw contract_error("gru_forward: batch sizes differ");

    if (cache) {
        cache->h_prev.clear();
        cache->z.clear();
        cache->r.clear();
        cache->hhat.clear();
        cache->x_row.clear();
        cache->batch = batch;
    }

    Matrix hstate(h, batch);  // h_0 = 0
    for (std::size_t t = 0; t < steps; ++t) {
        Matrix x(1, batch);
        for (std::size_t j = 0; j < batch; ++j) x(0, j) = histories(t, j);

        Matrix sz = multiply(model.w_z, h, 1, x);
        {
            Matrix uz_h = multiply(model.u_z, h, h, hstate);
            for (std::size_t i = 0; i < sz.data().size(); ++i) sz.data()[i] += uz_h.data()[i];
        }
        add_bias(sz, model.b_z);
        map_sigmoid(sz);

        Matrix sr = multiply(model.w_r, h, 1, x);
        {
            Matrix ur_h = multiply(model.u_r, h, h, hstate);
            for (std::size_t i = 0; i < sr.data().size(); ++i) sr.data()[i] += ur_h.data()[i];
        }
        add_bias(sr, model.b_r);
        map_sigmoid(sr);

        Matrix rh = hadamard(sr, hstate);
        Matrix sh = multiply(model.w_h, h, 1, x);
        {
            Matrix uh_rh = multiply(model.u_h, h, h, rh);
            for (std::size_t i = 0; i < sh.data().size(); ++i) sh.data()[i] += uh_rh.data()[i];
        }
        add_bias(sh, model.b_h);
        map_tanh(sh);

        Matrix hnext(h, batch);
        for (std::size_t i = 0; i < h * batch; ++i) {
            const double zv = sz.data()[i];
            hnext.data()[i] = (1.0 - zv) * hstate.data()[i] + zv * sh.data()[i];
        }

        if (cache) {
            cache->h_prev.push_back(std::move(hstate));
            cache->z.push_back(std::move(sz));
            cache->r.push_back(std::move(sr));
            cache->hhat.push_back(std::move(sh));
            cache->x_row.push_back(std::move(x));
        }
        hstate = std::move(hnext);
    }

    const std::size_t nc = contract.rows();
    Matrix head_input(h + nc, batch);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < batch; ++j) head_input(i, j) = hstate(i, j);
    for (std::size_t i = 0; i < nc; ++i)
        for (std::size_t j = 0; j < batch; ++j) head_input(h + i, j) = contract(i, j);

    Matrix raw = multiply(model.head.weights, 1, h + nc, head_input);
    add_bias(raw, model.head.bias);
    if (cache) cache->head_input = std::move(head_input);
    return raw;
}

nn::GradientSet gru_backward(const GruHedgeModel& model, const GruForwardCache& cache,
                             const Matrix& loss_grad) {
    const std::size_t h = model.hidden;
    const std::size_t steps = cache.z.size();
    const std::size_t batch = cache.batch;
    if (loss_grad.rows() != 1 || loss_grad.cols() != batch)
        throw contract_error("gru_backward: loss gradient must be (1 x batch)");

    nn::GradientSet grads;
    grads.slots.resize(11);
    auto& g_wz = grads.slots[0];
    auto& g_uz = grads.slots[1];
    auto& g_bz = grads.slots[2];
    auto& g_wr = grads.slots[3];
    auto& g_ur = grads.slots[4];
    auto& g_br = grads.slots[5];
    auto& g_wh = grads.slots[6];
    auto& g_uh = grads.slots[7];
    auto& g_bh = grads.slots[8];
    auto& g_head_w = grads.slots[9];
    auto& g_head_b = grads.slots[10];
    g_wz.assign(h, 0.0);
    g_uz.assign(h * h, 0.0);
    g_bz.assign(h, 0.0);
    g_wr.assign(h, 0.0);
    g_ur.assign(h * h, 0.0);
    g_br.assign(h, 0.0);
    g_wh.assign(h, 0.0);
    g_uh.assign(h * h, 0.0);
    g_bh.assign(h, 0.0);
    const std::size_t head_in = model.head.in;
    g_head_w.assign(head_in, 0.0);
    g_head_b.assign(1, 0.0);

    // head
    accumulate_outer(g_head_w, loss_grad, cache.head_input);
    row_sums_into(loss_grad, g_head_b);
    Matrix d_head_in = multiply_transposed(model.head.weights, 1, head_in, loss_grad);

    Matrix dh(h, batch);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < batch; ++j) dh(i, j) = d_head_in(i, j);

    for (std::size_t t = steps; t-- > 0;) {
        const Matrix& h_prev = cache.h_prev[t];
        const Matrix& z = cache.z[t];
        const Matrix& r = cache.r[t];
        const Matrix& hhat = cache.hhat[t];
        const Matrix& x = cache.x_row[t];

        Matrix ds_z(h, batch), ds_h(h, batch), dh_prev(h, batch);
        for (std::size_t i = 0; i < h * batch; ++i) {
            const double zv = z.data()[i];
            const double hv = hhat.data()[i];
            const double hp = h_prev.data()[i];
            const double d = dh.data()[i];
            ds_z.data()[i] = d * (hv - hp) * zv * (1.0 - zv);
            ds_h.data()[i] = d * zv * (1.0 - hv * hv);
            dh_prev.data()[i] = d * (1.0 - zv);
        }

        // candidate path
        accumulate_outer(g_wh, ds_h, x);
        {
            Matrix rh = hadamard(r, h_prev);
            accumulate_outer(g_uh, ds_h, rh);
        }
        row_sums_into(ds_h, g_bh);
        Matrix d_rh = multiply_transposed(model.u_h, h, h, ds_h);
        Matrix ds_r(h, batch);
        for (std::size_t i = 0; i < h * batch; ++i) {
            const double rv = r.data()[i];
            ds_r.data()[i] = d_rh.data()[i] * h_prev.data()[i] * rv * (1.0 - rv);
            dh_prev.data()[i] += d_rh.data()[i] * rv;
        }

        // gates
        accumulate_outer(g_wz, ds_z, x);
        accumulate_outer(g_uz, ds_z, h_prev);
        row_sums_into(ds_z, g_bz);
        accumulate_outer(g_wr, ds_r, x);
        accumulate_outer(g_ur, ds_r, h_prev);
        row_sums_into(ds_r, g_br);

        {
            Matrix back_z = multiply_transposed(model.u_z, h, h, ds_z);
            Matrix back_r = multiply_transposed(model.u_r, h, h, ds_r);
            for (std::size_t i = 0; i < h * batch; ++i)
                dh_prev.data()[i] += back_z.data()[i] + back_r.data()[i];
        }
        dh = std::move(dh_prev);
    }
    return grads;
}

std::vector<std::vector<double>*> trainable_params(GruHedgeModel& model) {
    return {&model.w_z, &model.u_z, &model.b_z, &model.w_r, &model.u_r, &model.b_r,
            &model.w_h, &model.u_h, &model.b_h, &model.head.weights, &model.head.bias};
}

std::vector<const std::vector<double>*> trainable_params(const GruHedgeModel& model) {
    return {&model.w_z, &model.u_z, &model.b_z, &model.w_r, &model.u_r, &model.b_r,
            &model.w_h, &model.u_h, &model.b_h, &model.head.weights, &model.head.bias};
}

namespace {

Matrix window_matrices(std::span<const SequenceWindow> windows, const FeatureStats& stats,
                       Matrix& contract) {
    const std::size_t batch = windows.size();
    Matrix histories(kSequenceLength, batch);
    contract = Matrix(2, batch);
    for (std::size_t j = 0; j < batch; ++j) {
        const auto& w = windows[j];
        if (w.history.size() != kSequenceLength)
            throw contract_error("gru_predict: history must have exactly " +
                                 std::to_string(kSequenceLength) + " entries");
        if (w.contract_features.size() != 2)
            throw contract_error("gru_predict: expected 2 contract features");
        for (std::size_t t = 0; t < kSequenceLength; ++t) histories(t, j) = w.history[t];
        for (std::size_t i = 0; i < 2; ++i)
            contract(i, j) = (w.contract_features[i] - stats.mean[i]) / stats.std[i];
    }
    return histories;
}

}  // namespace

std::vector<double> gru_predict(const GruHedgeModel& model,
                                std::span<const SequenceWindow> windows) {
    Matrix contract;
    const Matrix histories = window_matrices(windows, model.feature_stats, contract);
    const Matrix raw = gru_forward(model, histories, contract, nullptr);
    std::vector<double> deltas(windows.size());
    for (std::size_t j = 0; j < windows.size(); ++j)
        deltas[j] = apply_output_head(raw(0, j), model.kind, model.sigmoid_output);
    return deltas;
}

std::vector<double> gru_predict(const GruHedgeModel& model,
                                std::span<const SequenceSample> samples) {
    std::vector<SequenceWindow> windows;
    windows.reserve(samples.size());
    for (const auto& s : samples) windows.push_back(s.window);
    return gru_predict(model, windows);
}

}  // namespace mvhedge
