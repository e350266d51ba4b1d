#include "planet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

#include "planet/errors.hpp"

namespace planet::ad {

const Tensor& Var::value() const {
    if (tape_ == nullptr) throw ContractError("use of an unbound Var");
    return tape_->value(id_);
}

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), Tensor{}, false, false, nullptr});
    return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
    nodes_.push_back(Node{std::move(value), Tensor{}, true, false, nullptr});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
    bool rg = false;
    for (const auto& in : inputs) {
        if (in.tape() != this) throw ContractError("operands recorded on different tapes");
        rg = rg || nodes_[in.id()].requires_grad;
    }
    if (!value.all_finite()) throw NumericError("non-finite value produced on the tape");
    nodes_.push_back(Node{std::move(value), Tensor{}, rg, false, rg ? std::move(backward) : nullptr});
    return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_buffer(std::size_t id) {
    Node& n = nodes_.at(id);
    if (!n.has_grad) {
        n.grad = Tensor::zeros_like(n.value);
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::backward(const Var& loss) {
    if (loss.tape() != this) throw ContractError("backward: loss is not on this tape");
    if (nodes_.at(loss.id()).value.size() != 1) throw ContractError("backward: loss must be a scalar");
    for (auto& n : nodes_) {
        n.has_grad = false;
        n.grad = Tensor{};
    }
    visits_ = 0;
    if (!nodes_[loss.id()].requires_grad) return;
    grad_buffer(loss.id())[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.has_grad || !n.backward) continue;
        ++visits_;
        n.backward(*this, n.value, n.grad);
    }
}

Tensor Tape::grad(const Var& v) const {
    const Node& n = nodes_.at(v.id());
    if (!n.has_grad) return Tensor::zeros_like(n.value);
    return n.grad;
}

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
}

// g_dst += c * src, elementwise over equal-sized buffers
void axpy(Tensor& dst, const Tensor& src, double c = 1.0) {
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += c * s[i];
}

Var record(Tape& t, Tensor value, std::initializer_list<Var> inputs, Tape::BackwardFn fn) {
    return t.record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

void check_offsets(const Offsets& offsets, std::size_t n, const char* op) {
    if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != n)
        throw DimensionError(std::string(op) + ": offsets do not cover the input");
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s)
        if (offsets[s + 1] <= offsets[s]) throw DegenerateInputError(std::string(op) + ": empty segment");
}

}  // namespace

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out = a.value();
    axpy(out, b.value());
    const auto ia = a.id(), ib = b.id();
    return record(*a.tape(), std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
        if (t.requires_grad(ia)) axpy(t.grad_buffer(ia), g);
        if (t.requires_grad(ib)) axpy(t.grad_buffer(ib), g);
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a.value();
    axpy(out, b.value(), -1.0);
    const auto ia = a.id(), ib = b.id();
    return record(*a.tape(), std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
        if (t.requires_grad(ia)) axpy(t.grad_buffer(ia), g);
        if (t.requires_grad(ib)) axpy(t.grad_buffer(ib), g, -1.0);
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    const auto ia = a.id(), ib = b.id();
    return record(*a.tape(), std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& av = t.value(ia);
        const Tensor& bv = t.value(ib);
        if (t.requires_grad(ia)) {
            Tensor& ga = t.grad_buffer(ia);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

Var scale(const Var& a, double c) {
    Tensor out = a.value();
    for (auto& v : out.data()) v *= c;
    const auto ia = a.id();
    return record(*a.tape(), std::move(out), {a}, [ia, c](Tape& t, const Tensor&, const Tensor& g) {
        axpy(t.grad_buffer(ia), g, c);
    });
}

Var mul_scalar(const Var& a, const Var& s) {
    if (s.value().size() != 1) throw DimensionError("mul_scalar: scale operand must hold one element");
    const double sv = s.value()[0];
    Tensor out = a.value();
    for (auto& v : out.data()) v *= sv;
    const auto ia = a.id(), is = s.id();
    return record(*a.tape(), std::move(out), {a, s}, [ia, is](Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& av = t.value(ia);
        if (t.requires_grad(ia)) axpy(t.grad_buffer(ia), g, t.value(is)[0]);
        if (t.requires_grad(is)) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
            t.grad_buffer(is)[0] += acc;
        }
    });
}

Var add_row(const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const std::size_t m = av.rows(), n = av.cols();
    if (b.value().size() != n)
        throw DimensionError("add_row: bias of " + std::to_string(b.value().size()) + " for " +
                             std::to_string(n) + " columns");
    Tensor out = av;
    for (std::size_t i = 0; i < m; ++i) {
        auto r = out.row(i);
        for (std::size_t j = 0; j < n; ++j) r[j] += b.value()[j];
    }
    const auto ia = a.id(), ib = b.id();
    return record(*a.tape(), std::move(out), {a, b}, [ia, ib, m, n](Tape& t, const Tensor&, const Tensor& g) {
        if (t.requires_grad(ia)) axpy(t.grad_buffer(ia), g);
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
        }
    });
}

Var exp(const Var& a) {
    Tensor out = a.value();
    for (auto& v : out.data()) v = std::exp(v);
    const auto ia = a.id();
    return record(*a.tape(), std::move(out), {a}, [ia](Tape& t, const Tensor& y, const Tensor& g) {
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    });
}

Var log(const Var& a) {
    Tensor out = a.value();
    for (auto& v : out.data()) {
        if (!(v > 0.0)) throw NumericError("log of a non-positive value");
        v = std::log(v);
    }
    const auto ia = a.id();
    return record(*a.tape(), std::move(out), {a}, [ia](Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& av = t.value(ia);
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / av[i];
    });
}

Var tanh(const Var& a) {
    Tensor out = a.value();
    for (auto& v : out.data()) v = std::tanh(v);
    const auto ia = a.id();
    return record(*a.tape(), std::move(out), {a}, [ia](Tape& t, const Tensor& y, const Tensor& g) {
        Tensor& ga = t.grad_buffer(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
}

Var sum(const Var& a) {
    double s = 0.0;
    for (double v : a.value().data()) s += v;
    const auto ia = a.id();
    return record(*a.tape(), Tensor::scalar(s), {a}, [ia](Tape& t, const Tensor&, const Tensor& g) {
        for (auto& v : t.grad_buffer(ia).data()) v += g[0];
    });
}

Var mean(const Var& a) {
    const auto n = static_cast<double>(a.value().size());
    if (n == 0) throw DimensionError("mean of an empty tensor");
    double s = 0.0;
    for (double v : a.value().data()) s += v;
    const auto ia = a.id();
    return record(*a.tape(), Tensor::scalar(s / n), {a}, [ia, n](Tape& t, const Tensor&, const Tensor& g) {
        for (auto& v : t.grad_buffer(ia).data()) v += g[0] / n;
    });
}

Var matmul(const Var& a, const Var& b) {
    Tensor out = planet::matmul(a.value(), b.value());
    const auto ia = a.id(), ib = b.id();
    return record(*a.tape(), std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& y, const Tensor& g) {
        const Tensor& av = t.value(ia);
        const Tensor& bv = t.value(ib);
        const Tensor bm = bv.rank() == 1 ? bv.reshaped({bv.size(), 1}) : bv;
        const Tensor am = av.rank() == 1 ? av.reshaped({1, av.size()}) : av;
        const Tensor gm = g.reshaped({y.rows(), y.cols()});
        if (t.requires_grad(ia)) axpy(t.grad_buffer(ia), planet::matmul_nt(gm, bm));
        if (t.requires_grad(ib)) axpy(t.grad_buffer(ib), planet::matmul_tn(am, gm));
    });
}

Var matmul_nt(const Var& a, const Var& b) {
    Tensor out = planet::matmul_nt(a.value(), b.value());
    const auto ia = a.id(), ib = b.id();
    return record(*a.tape(), std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
        if (t.requires_grad(ia)) axpy(t.grad_buffer(ia), planet::matmul(g, t.value(ib)));
        if (t.requires_grad(ib)) axpy(t.grad_buffer(ib), planet::matmul_tn(g, t.value(ia)));
    });
}

Var transpose(const Var& a) {
    Tensor out = planet::transpose(a.value());
    const auto ia = a.id();
    return record(*a.tape(), std::move(out), {a}, [ia](Tape& t, const Tensor&, const Tensor& g) {
        axpy(t.grad_buffer(ia), planet::transpose(g));
    });
}

Var gather_rows(const Var& table, std::span<const std::size_t> ids) {
    const Tensor& tv = table.value();
    const std::size_t d = tv.cols();
    std::vector<double> out(ids.size() * d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= tv.rows()) throw DimensionError("gather_rows: row index out of range");
        std::copy_n(tv.row(ids[i]).begin(), d, out.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    const auto it = table.id();
    std::vector<std::size_t> idx(ids.begin(), ids.end());
    return record(*table.tape(), Tensor::matrix(ids.size(), d, std::move(out)), {table},
                  [it, idx = std::move(idx), d](Tape& t, const Tensor&, const Tensor& g) {
                      Tensor& gt = t.grad_buffer(it);
                      for (std::size_t i = 0; i < idx.size(); ++i)
                          for (std::size_t j = 0; j < d; ++j) gt[idx[i] * d + j] += g[i * d + j];
                  });
}

Var segment_mean(const Var& x, const Offsets& offsets) {
    const Tensor& xv = x.value();
    const std::size_t d = xv.cols();
    check_offsets(offsets, xv.rows(), "segment_mean");
    const std::size_t segs = offsets.size() - 1;
    Tensor out(Shape{segs, d}, 0.0);
    for (std::size_t s = 0; s < segs; ++s) {
        auto o = out.row(s);
        for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) {
            auto r = xv.row(i);
            for (std::size_t j = 0; j < d; ++j) o[j] += r[j];
        }
        const double inv = 1.0 / static_cast<double>(offsets[s + 1] - offsets[s]);
        for (auto& v : o) v *= inv;
    }
    const auto ix = x.id();
    return record(*x.tape(), std::move(out), {x}, [ix, offsets, d](Tape& t, const Tensor&, const Tensor& g) {
        Tensor& gx = t.grad_buffer(ix);
        for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
            const double inv = 1.0 / static_cast<double>(offsets[s + 1] - offsets[s]);
            for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i)
                for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += g[s * d + j] * inv;
        }
    });
}

namespace {

void softmax_segment(std::span<double> x) {
    const double mx = *std::max_element(x.begin(), x.end());
    double z = 0.0;
    for (auto& v : x) {
        v = std::exp(v - mx);
        z += v;
    }
    for (auto& v : x) v /= z;
}

void softmax_segment_grad(std::span<const double> y, std::span<const double> g, std::span<double> gx) {
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += g[i] * y[i];
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += y[i] * (g[i] - dot);
}

}  // namespace

Var segment_softmax(const Var& x, const Offsets& offsets) {
    Tensor out = x.value();
    check_offsets(offsets, out.size(), "segment_softmax");
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s)
        softmax_segment(out.data().subspan(offsets[s], offsets[s + 1] - offsets[s]));
    const auto ix = x.id();
    return record(*x.tape(), std::move(out), {x}, [ix, offsets](Tape& t, const Tensor& y, const Tensor& g) {
        Tensor& gx = t.grad_buffer(ix);
        for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
            const std::size_t b = offsets[s], n = offsets[s + 1] - offsets[s];
            softmax_segment_grad(y.data().subspan(b, n), g.data().subspan(b, n), gx.data().subspan(b, n));
        }
    });
}

Var segment_weighted_sum(const Var& w, const Var& x, const Offsets& offsets) {
    const Tensor& wv = w.value();
    const Tensor& xv = x.value();
    const std::size_t n = xv.rows(), d = xv.cols();
    if (wv.size() != n) throw DimensionError("segment_weighted_sum: one weight per row required");
    check_offsets(offsets, n, "segment_weighted_sum");
    const std::size_t segs = offsets.size() - 1;
    Tensor out(Shape{segs, d}, 0.0);
    for (std::size_t s = 0; s < segs; ++s) {
        auto o = out.row(s);
        for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) {
            auto r = xv.row(i);
            for (std::size_t j = 0; j < d; ++j) o[j] += wv[i] * r[j];
        }
    }
    const auto iw = w.id(), ix = x.id();
    return record(*x.tape(), std::move(out), {w, x}, [iw, ix, offsets, d](Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& wv = t.value(iw);
        const Tensor& xv = t.value(ix);
        const bool gw_on = t.requires_grad(iw), gx_on = t.requires_grad(ix);
        for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
            const auto gs = g.data().subspan(s * d, d);
            for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) {
                if (gw_on) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < d; ++j) acc += gs[j] * xv[i * d + j];
                    t.grad_buffer(iw)[i] += acc;
                }
                if (gx_on) {
                    Tensor& gx = t.grad_buffer(ix);
                    for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += wv[i] * gs[j];
                }
            }
        }
    });
}

Var softmax(const Var& x) {
    Tensor out = planet::softmax(x.value(), -1);
    const auto ix = x.id();
    return record(*x.tape(), std::move(out), {x}, [ix](Tape& t, const Tensor& y, const Tensor& g) {
        Tensor& gx = t.grad_buffer(ix);
        const std::size_t m = y.rows(), n = y.cols();
        for (std::size_t i = 0; i < m; ++i)
            softmax_segment_grad(y.data().subspan(i * n, n), g.data().subspan(i * n, n), gx.data().subspan(i * n, n));
    });
}

Var layernorm(const Var& x, const Var& gamma, const Var& beta, double eps) {
    Tensor out = planet::layernorm(x.value(), gamma.value(), beta.value(), eps);
    const auto ix = x.id(), ig = gamma.id(), ib = beta.id();
    return record(*x.tape(), std::move(out), {x, gamma, beta},
                  [ix, ig, ib, eps](Tape& t, const Tensor&, const Tensor& g) {
                      const Tensor& xv = t.value(ix);
                      const Tensor& gv = t.value(ig);
                      const std::size_t m = xv.rows(), d = xv.cols();
                      std::vector<double> xhat(d), gh(d);
                      for (std::size_t i = 0; i < m; ++i) {
                          auto r = xv.row(i);
                          double mu = 0.0;
                          for (double v : r) mu += v;
                          mu /= static_cast<double>(d);
                          double var = 0.0;
                          for (double v : r) var += (v - mu) * (v - mu);
                          var /= static_cast<double>(d);
                          const double inv = 1.0 / std::sqrt(var + eps);
                          double mean_gh = 0.0, mean_ghx = 0.0;
                          for (std::size_t j = 0; j < d; ++j) {
                              xhat[j] = (r[j] - mu) * inv;
                              gh[j] = g[i * d + j] * gv[j];
                              mean_gh += gh[j];
                              mean_ghx += gh[j] * xhat[j];
                          }
                          mean_gh /= static_cast<double>(d);
                          mean_ghx /= static_cast<double>(d);
                          if (t.requires_grad(ix)) {
                              Tensor& gx = t.grad_buffer(ix);
                              for (std::size_t j = 0; j < d; ++j)
                                  gx[i * d + j] += inv * (gh[j] - mean_gh - xhat[j] * mean_ghx);
                          }
                          if (t.requires_grad(ig)) {
                              Tensor& gg = t.grad_buffer(ig);
                              for (std::size_t j = 0; j < d; ++j) gg[j] += g[i * d + j] * xhat[j];
                          }
                          if (t.requires_grad(ib)) {
                              Tensor& gb = t.grad_buffer(ib);
                              for (std::size_t j = 0; j < d; ++j) gb[j] += g[i * d + j];
                          }
                      }
                  });
}

Var l2_normalize(const Var& x) {
    Tensor out = planet::l2_normalize(x.value());
    const auto ix = x.id();
    return record(*x.tape(), std::move(out), {x}, [ix](Tape& t, const Tensor& y, const Tensor& g) {
        const Tensor& xv = t.value(ix);
        Tensor& gx = t.grad_buffer(ix);
        const std::size_t m = y.rows(), d = y.cols();
        for (std::size_t i = 0; i < m; ++i) {
            double norm = 0.0, dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                norm += xv[i * d + j] * xv[i * d + j];
                dot += g[i * d + j] * y[i * d + j];
            }
            norm = std::sqrt(norm);
            for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += (g[i * d + j] - y[i * d + j] * dot) / norm;
        }
    });
}

Var cosine_sim(const Var& a, const Var& b) {
    if (a.value().size() != b.value().size()) throw DimensionError("cosine_sim: length mismatch");
    const double c = planet::cosine_sim(a.value(), b.value());
    const auto ia = a.id(), ib = b.id();
    return record(*a.tape(), Tensor::scalar(c), {a, b}, [ia, ib](Tape& t, const Tensor& y, const Tensor& g) {
        const Tensor& av = t.value(ia);
        const Tensor& bv = t.value(ib);
        double aa = 0.0, bb = 0.0;
        for (std::size_t i = 0; i < av.size(); ++i) {
            aa += av[i] * av[i];
            bb += bv[i] * bv[i];
        }
        const double na = std::sqrt(aa), nb = std::sqrt(bb), c = y[0];
        if (t.requires_grad(ia)) {
            Tensor& ga = t.grad_buffer(ia);
            for (std::size_t i = 0; i < av.size(); ++i) ga[i] += g[0] * (bv[i] / (na * nb) - c * av[i] / aa);
        }
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < bv.size(); ++i) gb[i] += g[0] * (av[i] / (na * nb) - c * bv[i] / bb);
        }
    });
}

Var cross_entropy_diag(const Var& logits) {
    const Tensor& lv = logits.value();
    if (lv.rank() != 2 || lv.rows() != lv.cols()) throw DimensionError("cross_entropy_diag: square matrix required");
    const std::size_t n = lv.rows();
    if (n == 0) throw DimensionError("cross_entropy_diag: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = lv.row(i);
        const double mx = *std::max_element(r.begin(), r.end());
        double z = 0.0;
        for (double v : r) z += std::exp(v - mx);
        total += mx + std::log(z) - r[i];
    }
    const auto il = logits.id();
    return record(*logits.tape(), Tensor::scalar(total / static_cast<double>(n)), {logits},
                  [il, n](Tape& t, const Tensor&, const Tensor& g) {
                      const Tensor p = planet::softmax(t.value(il), 1);
                      Tensor& gl = t.grad_buffer(il);
                      const double c = g[0] / static_cast<double>(n);
                      for (std::size_t i = 0; i < n; ++i)
                          for (std::size_t j = 0; j < n; ++j)
                              gl[i * n + j] += c * (p[i * n + j] - (i == j ? 1.0 : 0.0));
                  });
}

}  // namespace planet::ad
