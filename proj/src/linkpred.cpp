#include "kgfuse/linkpred.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "kgfuse/errors.hpp"
#include "parallel.hpp"

namespace kgfuse::linkpred {

namespace {

// Uniform in [0, 1) from the top 53 bits; std distributions are not
// reproducible across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
std::size_t below(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(rng, i)]);
}

bool skip_line(const std::string& line) {
    const auto p = line.find_first_not_of(" \t\r");
    return p == std::string::npos || line[p] == '#';
}

void read_split(std::istream& in, TripleDataset& ds, std::vector<IdTriple>& out) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (skip_line(line)) continue;
        std::vector<std::string> cells;
        std::istringstream is(line);
        std::string c;
        while (std::getline(is, c, '\t')) cells.push_back(c);
        if (cells.size() != 3) throw ParseError("expected head, relation, tail", lineno);
        if (lineno == 1 && cells[0] == "head" && cells[1] == "relation" && cells[2] == "tail") continue;
        out.push_back({ds.intern_entity(cells[0]), ds.intern_relation(cells[1]), ds.intern_entity(cells[2])});
    }
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }

void check_index(const KGEModel& m, std::size_t h, std::size_t r, std::size_t t) {
    if (h >= m.num_entities || t >= m.num_entities || r >= m.num_relations)
        throw LookupError("triple index out of range");
}

// Sparse gradient rows keyed by parameter row.
struct Grad {
    std::map<std::uint32_t, std::vector<double>> ent;
    std::map<std::uint32_t, std::vector<double>> rel;

    double* e(std::uint32_t i, std::size_t w) {
        auto& v = ent[i];
        if (v.empty()) v.assign(w, 0.0);
        return v.data();
    }
    double* r(std::uint32_t i, std::size_t w) {
        auto& v = rel[i];
        if (v.empty()) v.assign(w, 0.0);
        return v.data();
    }
    void add(const Grad& o) {
        for (const auto& [i, g] : o.ent) {
            double* d = e(i, g.size());
            for (std::size_t k = 0; k < g.size(); ++k) d[k] += g[k];
        }
        for (const auto& [i, g] : o.rel) {
            double* d = r(i, g.size());
            for (std::size_t k = 0; k < g.size(); ++k) d[k] += g[k];
        }
    }
};

// Adds coef * d(score)/d(params) for one triple.
void score_gradient(const KGEModel& m, const IdTriple& x, double coef, Grad& g) {
    const std::size_t d = m.dim;
    const double* h = m.e(x.h);
    const double* r = m.r(x.r);
    const double* t = m.e(x.t);
    const std::size_t ew = m.entity_width(), rw = m.relation_width();
    switch (m.kind) {
        case ModelKind::TransE: {
            std::vector<double> diff(d);
            double n2 = 0;
            for (std::size_t k = 0; k < d; ++k) {
                diff[k] = h[k] + r[k] - t[k];
                n2 += diff[k] * diff[k];
            }
            const double len = std::sqrt(n2);
            double* gh = g.e(x.h, ew);
            double* gr = g.r(x.r, rw);
            double* gt = g.e(x.t, ew);
            for (std::size_t k = 0; k < d; ++k) {
                double ds;  // d(score)/d(diff_k)
                if (m.norm == 1)
                    ds = diff[k] > 0 ? -1.0 : (diff[k] < 0 ? 1.0 : 0.0);
                else
                    ds = len > 0 ? -diff[k] / len : 0.0;
                gh[k] += coef * ds;
                gr[k] += coef * ds;
                gt[k] -= coef * ds;
            }
            break;
        }
        case ModelKind::DistMult: {
            double* gh = g.e(x.h, ew);
            double* gr = g.r(x.r, rw);
            double* gt = g.e(x.t, ew);
            for (std::size_t k = 0; k < d; ++k) {
                gh[k] += coef * r[k] * t[k];
                gr[k] += coef * h[k] * t[k];
                gt[k] += coef * h[k] * r[k];
            }
            break;
        }
        case ModelKind::ComplEx: {
            double* gh = g.e(x.h, ew);
            double* gr = g.r(x.r, rw);
            double* gt = g.e(x.t, ew);
            for (std::size_t k = 0; k < d; ++k) {
                const double hr = h[k], hi = h[d + k], rr = r[k], ri = r[d + k], tr = t[k], ti = t[d + k];
                gh[k] += coef * (rr * tr + ri * ti);
                gh[d + k] += coef * (rr * ti - ri * tr);
                gr[k] += coef * (hr * tr + hi * ti);
                gr[d + k] += coef * (hr * ti - hi * tr);
                gt[k] += coef * (hr * rr - hi * ri);
                gt[d + k] += coef * (hi * rr + hr * ri);
            }
            break;
        }
        case ModelKind::RotatE: {
            std::vector<double> xr(d), xi(d);
            double n2 = 0;
            for (std::size_t k = 0; k < d; ++k) {
                const double c = std::cos(r[k]), s = std::sin(r[k]);
                xr[k] = h[k] * c - h[d + k] * s - t[k];
                xi[k] = h[k] * s + h[d + k] * c - t[d + k];
                n2 += xr[k] * xr[k] + xi[k] * xi[k];
            }
            const double len = std::sqrt(n2);
            if (len == 0) break;
            double* gh = g.e(x.h, ew);
            double* gr = g.r(x.r, rw);
            double* gt = g.e(x.t, ew);
            for (std::size_t k = 0; k < d; ++k) {
                const double c = std::cos(r[k]), s = std::sin(r[k]);
                const double ar = -xr[k] / len, ai = -xi[k] / len;  // d(score)/d(x)
                gh[k] += coef * (ar * c + ai * s);
                gh[d + k] += coef * (-ar * s + ai * c);
                gt[k] -= coef * ar;
                gt[d + k] -= coef * ai;
                gr[k] += coef * (ar * (-h[k] * s - h[d + k] * c) + ai * (h[k] * c - h[d + k] * s));
            }
            break;
        }
    }
}

struct Sample {
    IdTriple pos;
    std::vector<IdTriple> negs;
};

bool margin_loss(ModelKind k) { return k == ModelKind::TransE || k == ModelKind::RotatE; }

double sample_loss(const KGEModel& m, const Sample& s, const TrainConfig& cfg, Grad& g) {
    const double sp = score_triple(m, s.pos.h, s.pos.r, s.pos.t);
    double loss = 0;
    if (margin_loss(m.kind)) {
        for (const auto& n : s.negs) {
            const double sn = score_triple(m, n.h, n.r, n.t);
            const double l = cfg.margin - sp + sn;
            if (!(l > 0)) {
                if (std::isnan(l)) return l;
                continue;
            }
            loss += l;
            score_gradient(m, s.pos, -1.0, g);
            score_gradient(m, n, 1.0, g);
        }
        return loss;
    }
    loss += softplus(-sp);
    score_gradient(m, s.pos, -sigmoid(-sp), g);
    const double w = 1.0 / static_cast<double>(s.negs.size());
    for (const auto& n : s.negs) {
        const double sn = score_triple(m, n.h, n.r, n.t);
        loss += w * softplus(sn);
        score_gradient(m, n, w * sigmoid(sn), g);
    }
    if (cfg.l2 > 0) {
        for (const auto idx : {s.pos.h, s.pos.t}) {
            const double* p = m.e(idx);
            double* ge = g.e(idx, m.entity_width());
            for (std::size_t k = 0; k < m.entity_width(); ++k) ge[k] += cfg.l2 * p[k];
        }
        const double* p = m.r(s.pos.r);
        double* gr = g.r(s.pos.r, m.relation_width());
        for (std::size_t k = 0; k < m.relation_width(); ++k) gr[k] += cfg.l2 * p[k];
    }
    return loss;
}

void project_unit_ball(double* row, std::size_t w) {
    double n2 = 0;
    for (std::size_t k = 0; k < w; ++k) n2 += row[k] * row[k];
    if (n2 > 1.0) {
        const double s = 1.0 / std::sqrt(n2);
        for (std::size_t k = 0; k < w; ++k) row[k] *= s;
    }
}

std::string describe(const TripleDataset& ds, const IdTriple& t) {
    return ds.entities[t.h] + " " + ds.relations[t.r] + " " + ds.entities[t.t];
}

}  // namespace

std::uint32_t TripleDataset::entity_id(std::string_view name) const {
    auto it = entity_index_.find(name);
    if (it == entity_index_.end()) throw LookupError("unknown entity '" + std::string(name) + "'");
    return it->second;
}

std::uint32_t TripleDataset::relation_id(std::string_view name) const {
    auto it = relation_index_.find(name);
    if (it == relation_index_.end()) throw LookupError("unknown relation '" + std::string(name) + "'");
    return it->second;
}

std::uint32_t TripleDataset::intern_entity(const std::string& name) {
    auto [it, fresh] = entity_index_.emplace(name, static_cast<std::uint32_t>(entities.size()));
    if (fresh) entities.push_back(name);
    return it->second;
}

std::uint32_t TripleDataset::intern_relation(const std::string& name) {
    auto [it, fresh] = relation_index_.emplace(name, static_cast<std::uint32_t>(relations.size()));
    if (fresh) relations.push_back(name);
    return it->second;
}

void TripleDataset::validate() const {
    std::set<IdTriple> seen;
    for (const auto* split : {&train, &valid, &test}) {
        std::set<IdTriple> local;
        for (const auto& t : *split) {
            if (t.h >= entities.size() || t.t >= entities.size() || t.r >= relations.size())
                throw IntegrityError("triple index out of range");
            local.insert(t);
        }
        for (const auto& t : local)
            if (!seen.insert(t).second) throw IntegrityError("splits overlap on " + describe(*this, t));
    }
}

TripleDataset TripleDataset::from_tsv(std::istream& train, std::istream& valid, std::istream& test) {
    TripleDataset ds;
    read_split(train, ds, ds.train);
    read_split(valid, ds, ds.valid);
    read_split(test, ds, ds.test);
    ds.validate();
    return ds;
}

TripleDataset TripleDataset::from_tsv_files(const std::string& train, const std::string& valid,
                                            const std::string& test) {
    std::ifstream a(train), b(valid), c(test);
    if (!a) throw ConfigError("cannot open " + train);
    if (!b) throw ConfigError("cannot open " + valid);
    if (!c) throw ConfigError("cannot open " + test);
    return from_tsv(a, b, c);
}

TripleDataset TripleDataset::from_graph(const KnowledgeGraph& g, double valid_fraction, double test_fraction,
                                        std::uint64_t seed) {
    if (valid_fraction < 0 || test_fraction < 0 || valid_fraction + test_fraction >= 1.0)
        throw ConfigError("split fractions must be >= 0 and sum below 1");
    TripleDataset ds;
    for (const auto& [id, _] : g.nodes()) ds.intern_entity(id);
    for (const auto& r : g.relation_taxonomy()) ds.intern_relation(r.str());
    std::vector<IdTriple> all;
    for (const auto& [k, _] : g.triples())
        all.push_back({ds.entity_id(k.head), ds.relation_id(k.relation.str()), ds.entity_id(k.tail)});
    std::mt19937_64 rng(seed);
    shuffle(all, rng);
    const auto n = static_cast<double>(all.size());
    const auto nt = static_cast<std::size_t>(std::llround(n * test_fraction));
    const auto nv = static_cast<std::size_t>(std::llround(n * valid_fraction));
    ds.test.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(nt));
    ds.valid.assign(all.begin() + static_cast<std::ptrdiff_t>(nt), all.begin() + static_cast<std::ptrdiff_t>(nt + nv));
    ds.train.assign(all.begin() + static_cast<std::ptrdiff_t>(nt + nv), all.end());
    return ds;
}

TripleDataset TripleDataset::synthetic_pair_cycles(std::size_t pairs, std::uint64_t seed) {
    const auto held = static_cast<std::size_t>(std::llround(0.1 * 2.0 * static_cast<double>(pairs)));
    if (pairs == 0 || 2 * held > pairs) throw ConfigError("need at least 5 pairs for a 80/10/10 split");
    TripleDataset ds;
    const auto r0 = ds.intern_relation("r0");
    const auto r1 = ds.intern_relation("r1");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> ab;
    for (std::size_t k = 0; k < pairs; ++k) {
        const std::string idx = (k < 10 ? "0" : "") + std::to_string(k);
        ab.emplace_back(ds.intern_entity("a" + idx), ds.intern_entity("b" + idx));
    }
    std::vector<std::size_t> order(pairs);
    for (std::size_t k = 0; k < pairs; ++k) order[k] = k;
    std::mt19937_64 rng(seed);
    shuffle(order, rng);
    std::vector<int> role(pairs, 0);  // 0 train, 1 valid, 2 test
    std::vector<bool> forward_held(pairs, false);
    for (std::size_t i = 0; i < 2 * held; ++i) {
        role[order[i]] = i < held ? 1 : 2;
        forward_held[order[i]] = (rng() & 1) != 0;
    }
    for (std::size_t k = 0; k < pairs; ++k) {
        const auto [a, b] = ab[k];
        const IdTriple fwd{a, r0, b}, back{b, r1, a};
        if (role[k] == 0) {
            ds.train.push_back(fwd);
            ds.train.push_back(back);
            continue;
        }
        auto& split = role[k] == 1 ? ds.valid : ds.test;
        split.push_back(forward_held[k] ? fwd : back);
        ds.train.push_back(forward_held[k] ? back : fwd);
    }
    return ds;
}

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::TransE: return "TransE";
        case ModelKind::RotatE: return "RotatE";
        case ModelKind::DistMult: return "DistMult";
        case ModelKind::ComplEx: return "ComplEx";
    }
    return "TransE";
}

ModelKind parse_model_kind(std::string_view s) {
    std::string low;
    for (char c : s) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (low == "transe") return ModelKind::TransE;
    if (low == "rotate") return ModelKind::RotatE;
    if (low == "distmult") return ModelKind::DistMult;
    if (low == "complex") return ModelKind::ComplEx;
    throw ConfigError("unknown model '" + std::string(s) + "' (TransE, RotatE, DistMult, ComplEx)");
}

std::size_t KGEModel::entity_width() const {
    return kind == ModelKind::ComplEx || kind == ModelKind::RotatE ? 2 * dim : dim;
}

std::size_t KGEModel::relation_width() const { return kind == ModelKind::ComplEx ? 2 * dim : dim; }

double score_triple(const KGEModel& m, std::size_t hi, std::size_t ri, std::size_t ti) {
    check_index(m, hi, ri, ti);
    const std::size_t d = m.dim;
    const double* h = m.e(hi);
    const double* r = m.r(ri);
    const double* t = m.e(ti);
    double s = 0;
    switch (m.kind) {
        case ModelKind::TransE:
            if (m.norm == 1) {
                for (std::size_t k = 0; k < d; ++k) s += std::abs(h[k] + r[k] - t[k]);
                return -s;
            }
            for (std::size_t k = 0; k < d; ++k) {
                const double x = h[k] + r[k] - t[k];
                s += x * x;
            }
            return -std::sqrt(s);
        case ModelKind::DistMult:
            // h * t first so swapping head and tail gives the same bits
            for (std::size_t k = 0; k < d; ++k) s += h[k] * t[k] * r[k];
            return s;
        case ModelKind::ComplEx:
            for (std::size_t k = 0; k < d; ++k)
                s += h[k] * r[k] * t[k] + h[d + k] * r[k] * t[d + k] + h[k] * r[d + k] * t[d + k] -
                     h[d + k] * r[d + k] * t[k];
            return s;
        case ModelKind::RotatE:
            for (std::size_t k = 0; k < d; ++k) {
                const double c = std::cos(r[k]), sn = std::sin(r[k]);
                const double xr = h[k] * c - h[d + k] * sn - t[k];
                const double xi = h[k] * sn + h[d + k] * c - t[d + k];
                s += xr * xr + xi * xi;
            }
            return -std::sqrt(s);
    }
    return 0;
}

KGEModel init_model(const TripleDataset& ds, ModelKind kind, const TrainConfig& cfg) {
    if (cfg.dim == 0) throw ConfigError("dim must be positive");
    if (cfg.norm != 1 && cfg.norm != 2) throw ConfigError("norm must be 1 or 2");
    KGEModel m;
    m.kind = kind;
    m.dim = cfg.dim;
    m.norm = cfg.norm;
    m.num_entities = ds.entities.size();
    m.num_relations = ds.relations.size();
    m.entity_names = ds.entities;
    m.relation_names = ds.relations;
    m.entity.resize(m.num_entities * m.entity_width());
    m.relation.resize(m.num_relations * m.relation_width());
    std::mt19937_64 rng(cfg.seed);
    const double d = static_cast<double>(cfg.dim);
    const double bound = kind == ModelKind::TransE ? 6.0 / std::sqrt(d) : 1.0 / std::sqrt(d);
    for (auto& x : m.entity) x = (2.0 * unit(rng) - 1.0) * bound;
    for (auto& x : m.relation)
        x = kind == ModelKind::RotatE ? (2.0 * unit(rng) - 1.0) * std::numbers::pi : (2.0 * unit(rng) - 1.0) * bound;
    if (kind == ModelKind::TransE) {
        for (std::size_t i = 0; i < m.num_relations; ++i) {
            double n2 = 0;
            for (std::size_t k = 0; k < m.dim; ++k) n2 += m.r(i)[k] * m.r(i)[k];
            const double s = n2 > 0 ? 1.0 / std::sqrt(n2) : 1.0;
            for (std::size_t k = 0; k < m.dim; ++k) m.r(i)[k] *= s;
        }
        for (std::size_t i = 0; i < m.num_entities; ++i) project_unit_ball(m.e(i), m.entity_width());
    }
    return m;
}

TrainResult train(const TripleDataset& ds, ModelKind kind, const TrainConfig& cfg) {
    if (ds.train.empty()) throw TrainingError("train split is empty");
    if (cfg.batch_size == 0 || cfg.negatives == 0 || !(cfg.learning_rate > 0) || cfg.threads == 0)
        throw ConfigError("batch_size, negatives, learning_rate and threads must be positive");
    if (margin_loss(kind) && !(cfg.margin > 0)) throw ConfigError("margin must be positive");
    TrainResult res{init_model(ds, kind, cfg), {}};
    KGEModel& m = res.model;
    std::vector<double> ent_acc(m.entity.size(), 0.0), rel_acc(m.relation.size(), 0.0);
    std::mt19937_64 rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
    std::vector<IdTriple> order = ds.train;
    const std::size_t ne = m.num_entities;

    auto apply = [&](double* p, double* acc, const std::vector<double>& g) {
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (cfg.optimizer == Optimizer::adagrad) {
                acc[k] += g[k] * g[k];
                p[k] -= cfg.learning_rate * g[k] / (std::sqrt(acc[k]) + 1e-10);
            } else {
                p[k] -= cfg.learning_rate * g[k];
            }
        }
    };

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_loss = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<Sample> batch;
            for (std::size_t i = start; i < end; ++i) {
                Sample s{order[i], {}};
                for (std::size_t k = 0; k < cfg.negatives; ++k) {
                    IdTriple n = s.pos;
                    if (rng() & 1)
                        n.h = static_cast<std::uint32_t>(below(rng, ne));
                    else
                        n.t = static_cast<std::uint32_t>(below(rng, ne));
                    s.negs.push_back(n);
                }
                batch.push_back(std::move(s));
            }
            const std::size_t chunks = std::min(cfg.threads, batch.size());
            std::vector<Grad> grads(chunks);
            std::vector<double> losses(batch.size(), 0.0);
            auto work = [&](std::size_t c) {
                for (std::size_t i = c; i < batch.size(); i += chunks) losses[i] = sample_loss(m, batch[i], cfg, grads[c]);
            };
            if (chunks == 1) {
                work(0);
            } else {
                detail::parallel_collect<int>(chunks, [&](std::size_t c, std::vector<int>&) { work(c); }, 1);
            }
            for (std::size_t i = 0; i < batch.size(); ++i) {
                if (!std::isfinite(losses[i]))
                    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) + " on triple " +
                                        describe(ds, batch[i].pos) + " (" + to_string(kind) +
                                        ", lr=" + std::to_string(cfg.learning_rate) + ")");
                epoch_loss += losses[i];
            }
            Grad total = std::move(grads[0]);
            for (std::size_t c = 1; c < chunks; ++c) total.add(grads[c]);
            for (const auto& [i, g] : total.ent) {
                apply(m.e(i), ent_acc.data() + i * m.entity_width(), g);
                if (kind == ModelKind::TransE) project_unit_ball(m.e(i), m.entity_width());
            }
            for (const auto& [i, g] : total.rel) apply(m.r(i), rel_acc.data() + i * m.relation_width(), g);
        }
        res.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    for (double x : m.entity)
        if (!std::isfinite(x)) throw TrainingError("non-finite entity parameter after training");
    for (double x : m.relation)
        if (!std::isfinite(x)) throw TrainingError("non-finite relation parameter after training");
    return res;
}

std::string to_string(Setting s) { return s == Setting::raw ? "raw" : "filtered"; }

KnownTriples::KnownTriples(const TripleDataset& ds) : ne_(ds.entities.size()), nr_(ds.relations.size()) {
    for (const auto* split : {&ds.train, &ds.valid, &ds.test})
        for (const auto& t : *split) keys_.push_back((t.h * nr_ + t.r) * ne_ + t.t);
    std::sort(keys_.begin(), keys_.end());
    keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
}

bool KnownTriples::contains(std::uint32_t h, std::uint32_t r, std::uint32_t t) const {
    if (h >= ne_ || t >= ne_ || r >= nr_) return false;
    return std::binary_search(keys_.begin(), keys_.end(), (h * nr_ + r) * ne_ + t);
}

std::size_t rank_from_scores(const std::vector<double>& scores, std::size_t truth, const std::vector<bool>* excluded) {
    if (truth >= scores.size()) throw LookupError("true entity out of range");
    const double s = scores[truth];
    std::size_t rank = 1;
    for (std::size_t c = 0; c < scores.size(); ++c) {
        if (c == truth || (excluded && (*excluded)[c])) continue;
        if (std::isnan(s) || std::isnan(scores[c]) || scores[c] >= s) ++rank;
    }
    return rank;
}

std::size_t rank_query(const KGEModel& m, const IdTriple& truth, Slot missing, Setting setting,
                       const KnownTriples* known) {
    check_index(m, truth.h, truth.r, truth.t);
    std::vector<double> scores(m.num_entities);
    std::vector<bool> excluded(m.num_entities, false);
    const bool filter = setting == Setting::filtered && known;
    for (std::uint32_t c = 0; c < m.num_entities; ++c) {
        const std::uint32_t h = missing == Slot::head ? c : truth.h;
        const std::uint32_t t = missing == Slot::tail ? c : truth.t;
        scores[c] = score_triple(m, h, truth.r, t);
        if (filter && known->contains(h, truth.r, t)) excluded[c] = true;
    }
    return rank_from_scores(scores, missing == Slot::head ? truth.h : truth.t, &excluded);
}

RankingReport evaluate_ranking(const std::vector<std::size_t>& ranks, const std::vector<std::size_t>& ks) {
    if (ranks.empty()) throw Error("no ranks to evaluate");
    RankingReport r;
    r.ranks = ranks;
    const double n = static_cast<double>(ranks.size());
    double sum = 0, rec = 0;
    for (auto x : ranks) {
        if (x == 0) throw Error("ranks start at 1");
        sum += static_cast<double>(x);
        rec += 1.0 / static_cast<double>(x);
    }
    r.mr = sum / n;
    r.mrr = rec / n;
    for (auto k : ks) {
        std::size_t within = 0;
        for (auto x : ranks) within += x <= k;
        r.hits[k] = static_cast<double>(within) / n;
        double lit = 0;
        for (auto x : ranks) lit += (x <= k ? 1.0 : 0.0) / static_cast<double>(k);
        r.p_at_k_literal[k] = lit / n;
    }
    return r;
}

RankingReport evaluate_model(const KGEModel& m, const TripleDataset& ds, const std::vector<IdTriple>& split,
                             Setting setting, const std::vector<std::size_t>& ks) {
    const KnownTriples known(ds);
    struct Pair {
        std::size_t i, tail, head;
    };
    auto rows = detail::parallel_collect<Pair>(split.size(), [&](std::size_t i, std::vector<Pair>& out) {
        out.push_back({i, rank_query(m, split[i], Slot::tail, setting, &known),
                       rank_query(m, split[i], Slot::head, setting, &known)});
    }, 16);
    std::sort(rows.begin(), rows.end(), [](const Pair& a, const Pair& b) { return a.i < b.i; });
    std::vector<std::size_t> ranks;
    for (const auto& p : rows) {
        ranks.push_back(p.tail);
        ranks.push_back(p.head);
    }
    auto r = evaluate_ranking(ranks, ks);
    r.setting = setting;
    return r;
}

nlohmann::json ranking_report_to_json(const RankingReport& r, ModelKind kind, bool include_ranks) {
    nlohmann::json j{{"model", to_string(kind)}, {"setting", to_string(r.setting)}, {"queries", r.ranks.size()},
                     {"MR", r.mr}, {"MRR", r.mrr}};
    for (const auto& [k, v] : r.hits) j["P@" + std::to_string(k)] = v;
    nlohmann::json lit = nlohmann::json::object();
    for (const auto& [k, v] : r.p_at_k_literal) lit["P@" + std::to_string(k)] = v;
    j["p_at_k_literal"] = lit;
    if (include_ranks) j["ranks"] = r.ranks;
    return j;
}

nlohmann::json model_to_json(const KGEModel& m) {
    return {{"kind", to_string(m.kind)},       {"dim", m.dim},
            {"norm", m.norm},                  {"num_entities", m.num_entities},
            {"num_relations", m.num_relations}, {"entity", m.entity},
            {"relation", m.relation},          {"entity_names", m.entity_names},
            {"relation_names", m.relation_names}};
}

KGEModel model_from_json(const nlohmann::json& j) {
    try {
        KGEModel m;
        m.kind = parse_model_kind(j.at("kind").get<std::string>());
        m.dim = j.at("dim").get<std::size_t>();
        m.norm = j.value("norm", 2);
        m.num_entities = j.at("num_entities").get<std::size_t>();
        m.num_relations = j.at("num_relations").get<std::size_t>();
        m.entity = j.at("entity").get<std::vector<double>>();
        m.relation = j.at("relation").get<std::vector<double>>();
        m.entity_names = j.value("entity_names", std::vector<std::string>{});
        m.relation_names = j.value("relation_names", std::vector<std::string>{});
        if (m.entity.size() != m.num_entities * m.entity_width() ||
            m.relation.size() != m.num_relations * m.relation_width())
            throw ParseError("model parameter shapes do not match dim and counts");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad model file: ") + e.what());
    }
}

void save_model(const KGEModel& m, const std::string& path, const std::optional<std::string>& config_hash) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    auto j = model_to_json(m);
    if (config_hash) j["config_hash"] = *config_hash;
    out << j.dump() << '\n';
}

KGEModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what());
    }
    return model_from_json(j);
}

}  // namespace kgfuse::linkpred
