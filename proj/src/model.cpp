#include "poolbound/model.hpp"

#include <cmath>
#include <string>

namespace poolbound::model {

const char* variant_name(AttentionVariant v) {
    switch (v) {
        case AttentionVariant::DotProduct: return "dot";
        case AttentionVariant::L2Tied: return "l2";
        case AttentionVariant::Scsa: return "scsa";
    }
    return "?";
}

HeadWeights HeadWeights::tied(Matrix w_q, Matrix w_v) {
    HeadWeights h;
    h.w_k = w_q;
    h.w_q = std::move(w_q);
    h.w_v = std::move(w_v);
    return h;
}

void ScsaParams::validate() const {
    if (!(nabla > 0.0) || !(nu > 0.0) || !(tau > 0.0))
        throw ConfigError("scsa: nabla, nu, tau must be positive");
    if (window < 2) throw ConfigError("scsa: window must be >= 2");
}

namespace {

void check_head_shapes(const HeadWeights& head, std::size_t d, std::size_t head_dim) {
    if (head.w_q.rows() != d || head.w_q.cols() != head_dim ||
        !head.w_q.same_shape(head.w_k) || !head.w_q.same_shape(head.w_v))
        throw InvalidInputError("head weights must all be d x (d/H)");
}

void check_layer_shapes(const LayerWeights& layer, std::size_t d, std::size_t num_heads) {
    if (num_heads == 0 || d % num_heads != 0)
        throw InvalidInputError("head count must be >= 1 and divide d");
    if (layer.heads.size() != num_heads)
        throw InvalidInputError("layer must have exactly H heads");
    for (const HeadWeights& head : layer.heads)
        check_head_shapes(head, d, d / num_heads);
    if (layer.w_o.rows() != d || layer.w_o.cols() != d)
        throw InvalidInputError("w_o must be d x d");
    if (layer.w_ffn.rows() != d || layer.w_ffn.cols() != d)
        throw InvalidInputError("w_ffn must be d x d");
}

}  // namespace

void ModelConfig::validate() const {
    if (embed_dim < 2) throw ConfigError("model: embed_dim must be >= 2");
    if (num_heads == 0 || embed_dim % num_heads != 0)
        throw ConfigError("model: head count must divide embed_dim");
    if (seq_len == 0) throw ConfigError("model: seq_len must be >= 1");
    if (!(input_bound > 0.0)) throw ConfigError("model: input_bound must be positive");
    if (layers.empty()) throw ConfigError("model: at least one layer required");
    for (const LayerWeights& layer : layers) check_layer_shapes(layer, embed_dim, num_heads);
    if (variant == AttentionVariant::Scsa) {
        if (!scsa.has_value()) throw ConfigError("model: scsa variant requires scsa params");
        scsa->validate();
        if (seq_len % scsa->window != 0)
            throw ConfigError("model: scsa window must divide seq_len");
    }
    if (variant == AttentionVariant::L2Tied) {
        for (const LayerWeights& layer : layers)
            for (const HeadWeights& head : layer.heads)
                if (!head.is_tied())
                    throw ConfigError("model: l2 variant requires tied query/key weights");
    }
}

LayerWeights zero_layer(std::size_t embed_dim, std::size_t num_heads, AttentionVariant) {
    const std::size_t head_dim = embed_dim / num_heads;
    LayerWeights layer;
    layer.heads.assign(num_heads, HeadWeights{Matrix(embed_dim, head_dim),
                                              Matrix(embed_dim, head_dim),
                                              Matrix(embed_dim, head_dim)});
    layer.w_o = Matrix(embed_dim, embed_dim);
    layer.w_ffn = Matrix(embed_dim, embed_dim);
    return layer;
}

LayerWeights gaussian_layer(std::size_t embed_dim, std::size_t num_heads,
                            linalg::RngStream& rng, AttentionVariant variant) {
    const std::size_t head_dim = embed_dim / num_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(embed_dim));
    auto draw = [&](std::size_t r, std::size_t c) {
        Matrix m = linalg::gaussian_matrix(r, c, rng);
        for (double& x : m.data()) x *= scale;
        return m;
    };
    LayerWeights layer;
    for (std::size_t h = 0; h < num_heads; ++h) {
        Matrix w_q = draw(embed_dim, head_dim);
        Matrix w_k = draw(embed_dim, head_dim);
        Matrix w_v = draw(embed_dim, head_dim);
        if (variant == AttentionVariant::L2Tied)
            layer.heads.push_back(HeadWeights::tied(std::move(w_q), std::move(w_v)));
        else
            layer.heads.push_back(HeadWeights{std::move(w_q), std::move(w_k), std::move(w_v)});
    }
    layer.w_o = draw(embed_dim, embed_dim);
    layer.w_ffn = draw(embed_dim, embed_dim);
    return layer;
}

Matrix attention_head_dot(const Matrix& x, const HeadWeights& head, std::size_t head_dim) {
    linalg::validate(x, "attention_head_dot");
    check_head_shapes(head, x.cols(), head_dim);
    const Matrix q = x * head.w_q;
    const Matrix k = x * head.w_k;
    Matrix logits = q * linalg::transpose(k);
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    for (double& v : logits.data()) v *= scale;
    return linalg::softmax_rows(logits) * (x * head.w_v);
}

Matrix attention_head_l2(const Matrix& x, const HeadWeights& head, std::size_t head_dim) {
    linalg::validate(x, "attention_head_l2");
    check_head_shapes(head, x.cols(), head_dim);
    if (!head.is_tied())
        throw InvalidInputError("attention_head_l2: query/key weights must be tied");
    const Matrix q = x * head.w_q;
    const Matrix k = x * head.w_k;
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    Matrix logits(x.rows(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.rows(); ++j) {
            double dist2 = 0.0;
            for (std::size_t c = 0; c < head_dim; ++c) {
                const double diff = q(i, c) - k(j, c);
                dist2 += diff * diff;
            }
            logits(i, j) = -dist2 * scale;
        }
    }
    return linalg::softmax_rows(logits) * (x * head.w_v);
}

namespace {

// Rows divided by (row norm + nabla).
Matrix scsa_normalize(const Matrix& m, double nabla) {
    Matrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double denom = linalg::norm2(m.row(i)) + nabla;
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) /= denom;
    }
    return out;
}

}  // namespace

Matrix attention_head_scsa(const Matrix& x_window, const HeadWeights& head,
                           const ScsaParams& p, std::size_t head_dim) {
    linalg::validate(x_window, "attention_head_scsa");
    check_head_shapes(head, x_window.cols(), head_dim);
    const Matrix q = scsa_normalize(x_window * head.w_q, p.nabla);
    const Matrix k = scsa_normalize(x_window * head.w_k, p.nabla);
    const Matrix v = scsa_normalize(x_window * head.w_v, p.nabla);
    Matrix scores = q * linalg::transpose(k);
    for (double& s : scores.data()) s *= p.tau;
    return p.nu * (linalg::softmax_rows(scores) * v);
}

Matrix scsa_layer(const Matrix& x, const LayerWeights& layer, const ScsaParams& p) {
    linalg::validate(x, "scsa_layer");
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (p.window == 0 || n % p.window != 0)
        throw ConfigError("scsa_layer: window must divide the token count");
    check_layer_shapes(layer, d, layer.heads.size());
    const std::size_t head_dim = d / layer.heads.size();

    std::vector<Matrix> head_outputs;
    head_outputs.reserve(layer.heads.size());
    for (const HeadWeights& head : layer.heads) {
        Matrix out(n, head_dim);
        for (std::size_t w0 = 0; w0 < n; w0 += p.window) {
            Matrix slice(p.window, d);
            for (std::size_t i = 0; i < p.window; ++i)
                for (std::size_t j = 0; j < d; ++j) slice(i, j) = x(w0 + i, j);
            const Matrix win = attention_head_scsa(slice, head, p, head_dim);
            for (std::size_t i = 0; i < p.window; ++i)
                for (std::size_t j = 0; j < head_dim; ++j) out(w0 + i, j) = win(i, j);
        }
        head_outputs.push_back(std::move(out));
    }
    return linalg::hconcat(head_outputs) * layer.w_o;
}

Matrix multi_head_attention(const Matrix& x, const LayerWeights& layer,
                            AttentionVariant variant, const ScsaParams* scsa) {
    linalg::validate(x, "multi_head_attention");
    check_layer_shapes(layer, x.cols(), layer.heads.size());
    if (variant == AttentionVariant::Scsa) {
        if (scsa == nullptr)
            throw ConfigError("multi_head_attention: scsa variant requires scsa params");
        return scsa_layer(x, layer, *scsa);
    }
    const std::size_t head_dim = x.cols() / layer.heads.size();
    std::vector<Matrix> head_outputs;
    head_outputs.reserve(layer.heads.size());
    for (const HeadWeights& head : layer.heads)
        head_outputs.push_back(variant == AttentionVariant::L2Tied
                                   ? attention_head_l2(x, head, head_dim)
                                   : attention_head_dot(x, head, head_dim));
    return linalg::hconcat(head_outputs) * layer.w_o;
}

Matrix center_norm(const Matrix& x) {
    linalg::validate(x, "center_norm");
    const std::size_t d = x.cols();
    if (d < 2) throw InvalidInputError("center_norm: needs at least 2 columns");
    const double scale = static_cast<double>(d) / static_cast<double>(d - 1);
    Matrix out(x.rows(), d);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += x(i, j);
        mean /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) out(i, j) = scale * (x(i, j) - mean);
    }
    return out;
}

Matrix ffn(const Matrix& x, const Matrix& w_ffn) {
    linalg::validate(x, "ffn");
    Matrix out = x * w_ffn;
    for (double& v : out.data()) v = std::max(v, 0.0);
    return out;
}

Matrix attention_block(const Matrix& x, const LayerWeights& layer,
                       AttentionVariant variant, const ScsaParams* scsa) {
    const Matrix x1 = center_norm(x + multi_head_attention(x, layer, variant, scsa));
    return center_norm(x1 + ffn(x1, layer.w_ffn));
}

Matrix backbone(const Matrix& x, const ModelConfig& cfg) {
    cfg.validate();
    if (x.rows() != cfg.seq_len || x.cols() != cfg.embed_dim)
        throw InvalidInputError("backbone: input shape does not match the config");
    const ScsaParams* scsa = cfg.scsa.has_value() ? &*cfg.scsa : nullptr;
    Matrix z = x;
    for (const LayerWeights& layer : cfg.layers)
        z = attention_block(z, layer, cfg.variant, scsa);
    return z;
}

Vector forward(const Matrix& x, const ModelConfig& cfg, pooling::PoolKind kind,
               const pooling::PoolParams* params) {
    return pooling::pool(backbone(x, cfg), kind, params);
}

Matrix attention_map(const Matrix& x, const HeadWeights& head, std::size_t head_dim) {
    linalg::validate(x, "attention_map");
    Matrix a = head.w_k * linalg::transpose(head.w_q);
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    for (double& v : a.data()) v *= scale;
    const Matrix logits = x * linalg::transpose(a) * linalg::transpose(x);
    return linalg::softmax_rows(logits) * x;
}

AttentionJacobian analytic_attention_jacobian(const Matrix& x, const HeadWeights& head,
                                              std::size_t head_dim) {
    linalg::validate(x, "analytic_attention_jacobian");
    check_head_shapes(head, x.cols(), head_dim);
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();

    AttentionJacobian jac;
    jac.n = n;
    jac.d = d;
    jac.a_matrix = head.w_k * linalg::transpose(head.w_q);
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    for (double& v : jac.a_matrix.data()) v *= scale;
    const Matrix& a = jac.a_matrix;

    const Matrix p = linalg::softmax_rows(x * linalg::transpose(a) * linalg::transpose(x));
    const Matrix xa = x * a;
    jac.blocks.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const Matrix softmax_jac = linalg::softmax_jacobian(p.row(i));
        const Matrix m = linalg::transpose(x) * softmax_jac;  // d x n, column j feeds J_ij
        const Matrix diag_term = m * xa;                      // X^T P^(i) X A
        const Vector a_xi = linalg::matvec(a, x.row(i));
        for (std::size_t j = 0; j < n; ++j) {
            Matrix block(d, d);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    block(r, c) = m(r, j) * a_xi[c];
            if (i == j) block = block + diag_term;
            const double pij = p(i, j);
            for (std::size_t r = 0; r < d; ++r) block(r, r) += pij;
            jac.blocks.push_back(std::move(block));
        }
    }
    return jac;
}

}  // namespace poolbound::model
