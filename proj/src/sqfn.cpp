#include "quadcone/sqfn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "quadcone/parallel.hpp"
#include "quadcone/polytope.hpp"

namespace qc {

namespace {
constexpr double kPi = 3.14159265358979323846;

double sinc(double z) { return std::abs(z) < 1e-8 ? 1.0 - z * z / 6.0 : std::sin(z) / z; }

int ambient_dim(const QuadraticSystem& sys, bool conical) { return sys.n() + (conical ? 1 : 0); }
}  // namespace

int CapSet::find(const std::vector<int>& idx) const {
    const int d = sys->d;
    std::int64_t lin = 0;
    for (int k = 0; k < d; ++k) {
        if (idx[k] < -J || idx[k] > J) return -1;
        lin = lin * (2 * J + 1) + (idx[k] + J);
    }
    return lookup[static_cast<size_t>(lin)];
}

CapSet make_caps(const QuadraticSystem& sys, double delta, bool conical) {
    if (!(delta > 0 && delta <= 1)) throw BadResolution("delta must lie in (0, 1]");
    CapSet cs;
    cs.sys = &sys;
    cs.delta = delta;
    cs.conical = conical;
    cs.spacing = 2 * std::sqrt(delta);
    const int d = sys.d;
    const double reach = 1.0 + 0.5 * cs.spacing * std::sqrt(static_cast<double>(d)) + 1e-12;
    cs.J = static_cast<int>(std::ceil(reach / cs.spacing));
    std::int64_t total = 1;
    for (int k = 0; k < d; ++k) total *= 2 * cs.J + 1;
    cs.lookup.assign(static_cast<size_t>(total), -1);
    const double r = 2.0 / cs.spacing;
    std::vector<int> idx(d, -cs.J);
    for (std::int64_t lin = 0; lin < total; ++lin) {
        Vec eta(d);
        for (int k = 0; k < d; ++k) eta[k] = idx[k] * cs.spacing;
        if (eta.norm() <= reach) {
            cs.lookup[static_cast<size_t>(lin)] = static_cast<int>(cs.centers.size());
            cs.centers.push_back(eta);
            cs.index.push_back(idx);
            cs.boxes.push_back(conical ? make_slab(sys, eta, r, 1.0) : make_cap(sys, eta, r, 1.0));
        }
        for (int k = d - 1; k >= 0; --k) {
            if (++idx[k] <= cs.J) break;
            idx[k] = -cs.J;
        }
    }
    return cs;
}

Vec lattice_spacing(const QuadraticSystem& sys, double delta, bool conical, const LatticeOptions& opt) {
    if (opt.tangential < 4 || opt.normal < 2 || (conical && opt.height < 2))
        throw ResolutionTooCoarse("need >= 4 lattice points per cap width, >= 2 per delta, >= 2 per unit height");
    Vec sp(ambient_dim(sys, conical));
    const double cap = 2 * std::sqrt(delta);
    for (int k = 0; k < sys.d; ++k) sp[k] = cap / opt.tangential;
    for (int k = 0; k < sys.l; ++k) sp[sys.d + k] = delta / opt.normal;
    if (conical) sp[sys.n()] = 1.0 / opt.height;
    return sp;
}

BasePoint base_point(const QuadraticSystem& sys, const Vec& omega, bool conical) {
    BasePoint b;
    b.h = conical ? omega[sys.n()] : 1.0;
    b.xi = omega.head(sys.d) / b.h;
    b.vertical = omega.segment(sys.d, sys.l) / b.h - sys.Q(b.xi);
    return b;
}

double partition_profile(double u) {
    u = std::abs(u);
    if (u <= 0.5) return 1.0;
    if (u >= 1.0) return 0.0;
    const double t = 2 * (1 - u);  // in (0, 1)
    const double a = std::exp(-1 / t), b = std::exp(-1 / (1 - t));
    return a / (a + b);
}

double bump(double t) {
    if (std::abs(t) >= 1) return 0.0;
    return std::exp(1 - 1 / (1 - t * t));
}

namespace {

struct Packet {
    int cap;
    double amp, phase;
    std::vector<double> shift;  // per axis, in units of the period
};

// Lattice terms of the inner region |xi - eta|_inf < spacing/3 with weights.
void packet_terms(const QuadraticSystem& sys, const CapSet& caps, const Vec& sp, int cap,
                  std::vector<std::pair<std::vector<int>, double>>& out) {
    const int d = sys.d, l = sys.l;
    const bool conical = caps.conical;
    const Vec& eta = caps.centers[cap];
    const double w = caps.spacing / 3;
    std::vector<double> hs;
    std::vector<int> hk;
    if (conical) {
        const int lo = static_cast<int>(std::ceil(0.5 / sp[sys.n()] - 1e-9));
        const int hi = static_cast<int>(std::floor(1.0 / sp[sys.n()] + 1e-9));
        for (int k = lo; k <= hi; ++k) {
            hk.push_back(k);
            hs.push_back(k * sp[sys.n()]);
        }
    } else {
        hk.push_back(0);
        hs.push_back(1.0);
    }
    for (size_t a = 0; a < hs.size(); ++a) {
        const double h = hs[a];
        const double hb = conical ? bump((h - 0.75) * 4) : 1.0;
        if (hb == 0) continue;
        std::vector<int> lo(d), hi(d);
        for (int k = 0; k < d; ++k) {
            lo[k] = static_cast<int>(std::ceil(h * (eta[k] - w) / sp[k]));
            hi[k] = static_cast<int>(std::floor(h * (eta[k] + w) / sp[k]));
            if (lo[k] > hi[k]) goto next_h;
        }
        {
            std::vector<int> kx = lo;
            for (;;) {
                Vec xi(d);
                double tb = 1.0;
                for (int k = 0; k < d; ++k) {
                    xi[k] = kx[k] * sp[k] / h;
                    tb *= bump((xi[k] - eta[k]) / w);
                }
                if (tb > 0 && xi.norm() <= 1.0) {
                    const Vec q = sys.Q(xi);
                    std::vector<int> ylo(l), yhi(l);
                    bool ok = true;
                    for (int j = 0; j < l; ++j) {
                        ylo[j] = static_cast<int>(std::ceil(h * (q[j] - caps.delta) / sp[d + j]));
                        yhi[j] = static_cast<int>(std::floor(h * (q[j] + caps.delta) / sp[d + j]));
                        if (ylo[j] > yhi[j]) ok = false;
                    }
                    if (ok) {
                        std::vector<int> ky = ylo;
                        for (;;) {
                            double vb = tb * hb;
                            for (int j = 0; j < l; ++j) vb *= bump((ky[j] * sp[d + j] / h - q[j]) / caps.delta);
                            if (vb > 0) {
                                std::vector<int> key(kx);
                                key.insert(key.end(), ky.begin(), ky.end());
                                if (conical) key.push_back(hk[a]);
                                out.emplace_back(std::move(key), vb);
                            }
                            int j = l - 1;
                            while (j >= 0 && ++ky[j] > yhi[j]) ky[j] = ylo[j], --j;
                            if (j < 0) break;
                        }
                    }
                }
                int k = d - 1;
                while (k >= 0 && ++kx[k] > hi[k]) kx[k] = lo[k], --k;
                if (k < 0) break;
            }
        }
    next_h:;
    }
}

}  // namespace

SpectralField synthesize_field(const QuadraticSystem& sys, const CapSet& caps, std::uint64_t seed,
                               std::uint64_t stream, const SynthesisOptions& opt) {
    SpectralField f;
    f.dim = ambient_dim(sys, caps.conical);
    f.spacing = lattice_spacing(sys, caps.delta, caps.conical, opt.lattice);
    f.conical = caps.conical;
    f.delta = caps.delta;
    std::vector<int> usable;
    for (size_t c = 0; c < caps.centers.size(); ++c)
        if (caps.centers[c].norm() <= 1.0 + 1e-12) usable.push_back(static_cast<int>(c));
    std::vector<Packet> packets;
    auto rng = make_rng(seed, stream);
    std::uniform_real_distribution<double> u01(0, 1);
    if (opt.aligned) {
        for (int c : usable) packets.push_back({c, 1.0, 0.0, std::vector<double>(f.dim, 0.0)});
    } else {
        const int n = opt.packets > 0 ? opt.packets : static_cast<int>(usable.size());
        std::uniform_int_distribution<size_t> pick(0, usable.size() - 1);
        for (int p = 0; p < n; ++p) {
            Packet pk;
            pk.cap = usable[pick(rng)];
            pk.amp = 0.5 + 0.5 * u01(rng);
            pk.phase = 2 * kPi * u01(rng);
            pk.shift.resize(f.dim);
            for (auto& s : pk.shift) s = u01(rng);
            packets.push_back(std::move(pk));
        }
    }
    std::vector<std::pair<std::vector<int>, cplx>> terms;
    std::vector<std::pair<std::vector<int>, double>> local;
    for (const auto& pk : packets) {
        local.clear();
        packet_terms(sys, caps, f.spacing, pk.cap, local);
        for (auto& [key, w] : local) {
            double ph = pk.phase;
            for (int k = 0; k < f.dim; ++k) ph -= 2 * kPi * std::fmod(key[k] * pk.shift[k], 1.0);
            terms.emplace_back(key, pk.amp * w * std::polar(1.0, ph));
        }
        f.caps.push_back(pk.cap);
    }
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t i = 0; i < terms.size();) {
        cplx c = 0;
        size_t j = i;
        for (; j < terms.size() && terms[j].first == terms[i].first; ++j) c += terms[j].second;
        if (c != cplx(0, 0)) {
            f.keys.insert(f.keys.end(), terms[i].first.begin(), terms[i].first.end());
            f.coeffs.push_back(c);
        }
        i = j;
    }
    std::sort(f.caps.begin(), f.caps.end());
    f.caps.erase(std::unique(f.caps.begin(), f.caps.end()), f.caps.end());
    return f;
}

std::vector<CapProjection> cap_project(const SpectralField& f, const CapSet& caps) {
    const QuadraticSystem& sys = *caps.sys;
    const int d = sys.d;
    if (f.dim != ambient_dim(sys, caps.conical)) throw DimensionMismatch("field and caps disagree on dimension");
    const double w = 2 * caps.spacing / 3;
    std::vector<CapProjection> byCap(caps.centers.size());
    std::vector<int> nb(d), off(d);
    std::vector<std::pair<int, double>> weights;
    for (size_t i = 0; i < f.size(); ++i) {
        if (f.coeffs[i] == cplx(0, 0)) continue;
        const BasePoint b = base_point(sys, f.frequency(i), caps.conical);
        weights.clear();
        double total = 0;
        std::fill(off.begin(), off.end(), -1);
        for (;;) {
            for (int k = 0; k < d; ++k) nb[k] = static_cast<int>(std::lround(b.xi[k] / caps.spacing)) + off[k];
            double phi = 1.0;
            for (int k = 0; k < d; ++k) phi *= partition_profile((b.xi[k] - nb[k] * caps.spacing) / w);
            if (phi > 0) {
                const int c = caps.find(nb);
                if (c < 0) throw PartitionGap("frequency outside the cap cover");
                weights.emplace_back(c, phi);
                total += phi;
            }
            int k = d - 1;
            while (k >= 0 && ++off[k] > 1) off[k] = -1, --k;
            if (k < 0) break;
        }
        if (total <= 0) throw PartitionGap("partition of unity vanishes on the support");
        double sum = 0;
        for (auto& [c, phi] : weights) {
            const double chi = phi / total;
            sum += chi;
            byCap[c].cap = c;
            byCap[c].terms.push_back(i);
            byCap[c].coeffs.push_back(chi * f.coeffs[i]);
        }
        if (std::abs(sum - 1) > 1e-8) throw PartitionGap("partition of unity does not sum to 1");
    }
    std::vector<CapProjection> out;
    for (auto& p : byCap)
        if (!p.terms.empty()) out.push_back(std::move(p));
    return out;
}

namespace {

void gather(const SpectralField& f, const CapProjection& p, std::vector<int>& keys) {
    keys.clear();
    for (size_t t : p.terms) keys.insert(keys.end(), f.key(t), f.key(t) + f.dim);
}

std::vector<int> max_span(const SpectralField& f, const std::vector<CapProjection>& proj) {
    std::vector<int> span(f.dim, 0), keys;
    for (const auto& p : proj) {
        gather(f, p, keys);
        const auto s = key_span(keys, f.dim);
        for (int k = 0; k < f.dim; ++k) span[k] = std::max(span[k], s[k]);
    }
    return span;
}

double square_function_fourth(const SpectralField& f, const std::vector<CapProjection>& proj) {
    DiffAccumulator acc(f.dim, max_span(f, proj));
    std::vector<int> keys;
    for (const auto& p : proj) {
        gather(f, p, keys);
        acc.add_autocorrelation(keys, p.coeffs);
    }
    return acc.energy();
}

}  // namespace

double l4_fourth(const SpectralField& f) {
    DiffAccumulator acc(f.dim, key_span(f.keys, f.dim));
    acc.add_autocorrelation(f.keys, f.coeffs);
    return acc.energy();
}

double sq_ratio(const SpectralField& f, const std::vector<CapProjection>& proj) {
    const double num = l4_fourth(f);
    if (num == 0) throw Error("sq_ratio of the zero field");
    return std::pow(num / square_function_fourth(f, proj), 0.25);
}

double sq_ratio_grid(const SpectralField& f, const std::vector<CapProjection>& proj) {
    const auto dims = alias_free_dims(f);
    const GridField g = to_grid(f, dims);
    std::vector<double> sq(g.total(), 0.0);
    double num = 0;
    for (const auto& v : g.values) num += std::norm(v) * std::norm(v);
    num /= static_cast<double>(g.total());
    if (num == 0) throw Error("sq_ratio of the zero field");
    for (const auto& p : proj) {
        SpectralField part;
        part.dim = f.dim;
        part.spacing = f.spacing;
        gather(f, p, part.keys);
        part.coeffs = p.coeffs;
        const GridField gp = to_grid(part, dims);
        for (size_t i = 0; i < sq.size(); ++i) sq[i] += std::norm(gp.values[i]);
    }
    double den = 0;
    for (double s : sq) den += s * s;
    den /= static_cast<double>(sq.size());
    return std::pow(num / den, 0.25);
}

std::vector<std::vector<int>> group_caps(const CapSet& caps, double s) {
    const int d = caps.sys->d;
    const int ncell = std::max(1, static_cast<int>(std::ceil(1.0 / s - 1e-9)));
    std::map<std::vector<int>, std::vector<int>> cells;
    for (size_t c = 0; c < caps.centers.size(); ++c) {
        std::vector<int> cell(d);
        for (int k = 0; k < d; ++k) {
            const int v = static_cast<int>(std::floor((caps.centers[c][k] + 1) / (2 * s) + 1e-9));
            cell[k] = std::clamp(v, 0, ncell - 1);
        }
        cells[cell].push_back(static_cast<int>(c));
    }
    std::vector<std::vector<int>> out;
    for (auto& [cell, members] : cells) out.push_back(std::move(members));
    return out;
}

std::vector<SectorLevel> build_envelopes(const CapSet& caps, double dual_scale) {
    if (!caps.conical) throw Error("wave envelopes are defined for the cone");
    const QuadraticSystem& sys = *caps.sys;
    const int d = sys.d;
    const double finest = std::sqrt(caps.delta);
    std::vector<SectorLevel> levels;
    for (double s = 1.0; s >= finest * (1 - 1e-9); s /= 2) {
        SectorLevel L;
        L.s = s;
        L.members = group_caps(caps, s);
        for (const auto& mem : L.members) {
            // Sector centre: the cell centre of its first cap.
            Vec eta(d);
            const int ncell = std::max(1, static_cast<int>(std::ceil(1.0 / s - 1e-9)));
            for (int k = 0; k < d; ++k) {
                const int v = std::clamp(static_cast<int>(std::floor((caps.centers[mem[0]][k] + 1) / (2 * s) + 1e-9)), 0,
                                         ncell - 1);
                eta[k] = std::min(1.0, -1 + (2 * v + 1) * s);
            }
            const Mat E = frame_at(sys, eta, true).basis();
            Vec W = Vec::Zero(sys.n() + 1);
            for (int c : mem) {
                const Box& th = caps.boxes[c];
                // theta* = E_theta^{-T} diag(k / w) [-1,1]^D read in coordinates E_tau^T x.
                const Mat M = E.transpose() * th.axes.transpose().inverse();
                for (int k = 0; k < W.size(); ++k) {
                    double w = 0;
                    for (int j = 0; j < W.size(); ++j) w += std::abs(M(k, j)) * dual_scale / th.half[j];
                    W[k] = std::max(W[k], w);
                }
            }
            L.frame.push_back(E);
            L.halfwidth.push_back(W);
        }
        levels.push_back(std::move(L));
    }
    return levels;
}

namespace {

double envelope_rhs(const SpectralField& f, const std::vector<CapProjection>& proj, const CapSet& caps,
                    const std::vector<SectorLevel>& levels, DiffAccumulator& acc, std::vector<double>* per_level) {
    std::vector<int> where(caps.centers.size(), -1);
    for (size_t p = 0; p < proj.size(); ++p) where[proj[p].cap] = static_cast<int>(p);
    std::vector<int> keys;
    double total = 0;
    for (const auto& L : levels) {
        double lev = 0;
        for (size_t t = 0; t < L.members.size(); ++t) {
            acc.clear();
            bool any = false;
            for (int c : L.members[t]) {
                if (where[c] < 0) continue;
                gather(f, proj[where[c]], keys);
                acc.add_autocorrelation(keys, proj[where[c]].coeffs);
                any = true;
            }
            if (!any) continue;
            const Mat Einv = L.frame[t].inverse();
            const Vec& W = L.halfwidth[t];
            Vec om(f.dim);
            lev += acc.weighted_energy([&](const int* k) {
                for (int a = 0; a < f.dim; ++a) om[a] = k[a] * f.spacing[a];
                const Vec v = Einv * om;
                double w = 1;
                for (int a = 0; a < f.dim; ++a) {
                    const double sn = sinc(2 * kPi * W[a] * v[a]);
                    w *= sn * sn;
                }
                return w;
            });
        }
        if (per_level) per_level->push_back(lev);
        total += lev;
    }
    acc.clear();
    return total;
}

}  // namespace

nlohmann::json KakeyaReport::to_json() const {
    return {{"r", r}, {"lhs", lhs}, {"rhs", rhs}, {"ratio", ratio}, {"trivial", trivial}, {"level_s", level_s},
            {"level_rhs", level_rhs}};
}

KakeyaReport kakeya_check(const SpectralField& f, const CapSet& caps, double r, double dual_scale) {
    if (std::abs(caps.delta * r * r - 1) > 1e-9) throw Error("kakeya_check needs caps at thickness r^-2");
    KakeyaReport rep;
    rep.r = r;
    const auto proj = cap_project(f, caps);
    if (proj.empty()) {
        rep.trivial = true;
        return rep;
    }
    DiffAccumulator acc(f.dim, max_span(f, proj));
    std::vector<int> keys;
    for (const auto& p : proj) {
        gather(f, p, keys);
        acc.add_autocorrelation(keys, p.coeffs);
    }
    rep.lhs = acc.energy();
    acc.clear();
    if (rep.lhs == 0) {
        rep.trivial = true;
        return rep;
    }
    const auto levels = build_envelopes(caps, dual_scale);
    for (const auto& L : levels) rep.level_s.push_back(L.s);
    rep.rhs = envelope_rhs(f, proj, caps, levels, acc, &rep.level_rhs);
    rep.ratio = rep.lhs / rep.rhs;
    return rep;
}

double two_scale_ratio(const SpectralField& f, const CapSet& caps, double r, double dual_scale) {
    const double R = 1.0 / caps.delta;
    if (r < 1 || r > R * (1 + 1e-12)) throw Error("two-scale ratio needs 1 <= r <= R");
    const auto proj = cap_project(f, caps);
    if (proj.empty()) return 0.0;
    // Left side: caps grouped at half side r^{-1/2}, cube tiles of half width r.
    std::vector<int> where(caps.centers.size(), -1);
    for (size_t p = 0; p < proj.size(); ++p) where[proj[p].cap] = static_cast<int>(p);
    const auto groups = group_caps(caps, 1.0 / std::sqrt(r));
    std::vector<std::vector<int>> gkeys;
    std::vector<std::vector<cplx>> gcoef;
    std::vector<int> span(f.dim, 0);
    for (const auto& g : groups) {
        std::map<size_t, cplx> merged;
        for (int c : g)
            if (where[c] >= 0) {
                const auto& p = proj[where[c]];
                for (size_t i = 0; i < p.terms.size(); ++i) merged[p.terms[i]] += p.coeffs[i];
            }
        if (merged.empty()) continue;
        std::vector<int> keys;
        std::vector<cplx> co;
        for (auto& [t, c] : merged) {
            keys.insert(keys.end(), f.key(t), f.key(t) + f.dim);
            co.push_back(c);
        }
        const auto s = key_span(keys, f.dim);
        for (int k = 0; k < f.dim; ++k) span[k] = std::max(span[k], s[k]);
        gkeys.push_back(std::move(keys));
        gcoef.push_back(std::move(co));
    }
    const auto fine = max_span(f, proj);
    for (int k = 0; k < f.dim; ++k) span[k] = std::max(span[k], fine[k]);
    DiffAccumulator acc(f.dim, span);
    for (size_t g = 0; g < gkeys.size(); ++g) acc.add_autocorrelation(gkeys[g], gcoef[g]);
    Vec om(f.dim);
    const double lhs = acc.weighted_energy([&](const int* k) {
        double w = 1;
        for (int a = 0; a < f.dim; ++a) {
            const double sn = sinc(2 * kPi * r * k[a] * f.spacing[a]);
            w *= sn * sn;
        }
        return w;
    });
    acc.clear();
    if (lhs == 0) return 0.0;
    const auto levels = build_envelopes(caps, dual_scale);
    return lhs / envelope_rhs(f, proj, caps, levels, acc, nullptr);
}

nlohmann::json TwoScaleReport::to_json() const {
    return {{"r", r},           {"R", R},       {"S_emp", S_emp},   {"median", median},
            {"ensemble_size", ensemble_size}, {"seed", seed}, {"ratios", ratios}};
}

TwoScaleReport measure_S(const QuadraticSystem& sys, double r, double R, int ensemble, std::uint64_t seed,
                         const SynthesisOptions& opt) {
    if (r > R) throw Error("measure_S needs r <= R");
    if (ensemble < 1) throw Error("ensemble must be positive");
    const CapSet caps = make_caps(sys, 1.0 / R, true);
    TwoScaleReport rep;
    rep.r = r;
    rep.R = R;
    rep.ensemble_size = ensemble;
    rep.seed = seed;
    rep.ratios.assign(ensemble, 0.0);
    parallel_for(ensemble, [&](std::int64_t m) {
        const auto f = synthesize_field(sys, caps, seed, static_cast<std::uint64_t>(m), opt);
        rep.ratios[m] = two_scale_ratio(f, caps, r);
    });
    rep.S_emp = *std::max_element(rep.ratios.begin(), rep.ratios.end());
    auto sorted = rep.ratios;
    std::sort(sorted.begin(), sorted.end());
    rep.median = sorted[sorted.size() / 2];
    return rep;
}

nlohmann::json SqEnsembleReport::to_json() const {
    return {{"delta", delta},       {"conical", conical},   {"ensemble", ensemble},
            {"max_ratio", max_ratio}, {"min_ratio", min_ratio}, {"stress_ratio", stress_ratio},
            {"terms", terms},       {"caps", caps}};
}

SqEnsembleReport sq_ensemble(const QuadraticSystem& sys, double delta, bool conical, int ensemble,
                             std::uint64_t seed, const SynthesisOptions& opt) {
    if (ensemble < 1) throw Error("ensemble must be positive");
    const CapSet cs = make_caps(sys, delta, conical);
    SqEnsembleReport rep;
    rep.delta = delta;
    rep.conical = conical;
    rep.ensemble = ensemble;
    rep.caps = static_cast<int>(cs.centers.size());
    std::vector<double> ratios(ensemble, 0.0);
    std::vector<std::int64_t> sizes(ensemble, 0);
    parallel_for(ensemble, [&](std::int64_t m) {
        SynthesisOptions o = opt;
        o.aligned = (m == 0);
        const auto f = synthesize_field(sys, cs, seed, static_cast<std::uint64_t>(m), o);
        ratios[m] = sq_ratio(f, cap_project(f, cs));
        sizes[m] = static_cast<std::int64_t>(f.size());
    });
    rep.stress_ratio = ratios[0];
    rep.terms = sizes[0];
    rep.max_ratio = *std::max_element(ratios.begin(), ratios.end());
    rep.min_ratio = *std::min_element(ratios.begin(), ratios.end());
    return rep;
}

Box make_tube(const QuadraticSystem& sys, const Vec& xi, double K) {
    const Frame fr = frame_at(sys, xi, true);
    const Mat B = fr.basis();  // [c | t | n]
    const int D = static_cast<int>(B.cols());
    Mat ordered(D, D);
    ordered.leftCols(sys.d) = B.middleCols(1, sys.d);
    ordered.middleCols(sys.d, sys.l) = B.rightCols(sys.l);
    ordered.col(D - 1) = B.col(0);
    Eigen::HouseholderQR<Mat> qr(ordered);
    Mat Q = qr.householderQ() * Mat::Identity(D, D);
    const Mat Rm = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < D; ++k)
        if (Rm(k, k) < 0) Q.col(k) *= -1;
    Vec half(D);
    for (int k = 0; k < D; ++k) half[k] = (k < sys.d ? std::sqrt(K) : K) / 2;
    return Box(xi, Vec::Zero(D), Q, half);
}

nlohmann::json TubeReport::to_json() const {
    return {{"volume", volume},
            {"std_error", std_error},
            {"single_volume", single_volume},
            {"samples", samples},
            {"method", method == TubeMethod::Exact ? "exact" : "monte-carlo"}};
}

TubeReport tube_intersection(const QuadraticSystem& sys, double K, const Vec& xi1, const Vec& xi2, TubeMethod method,
                             std::int64_t samples, std::uint64_t seed) {
    if (xi1.size() != sys.d || xi2.size() != sys.d) throw DimensionMismatch("tube base points have the wrong dimension");
    const double s = (xi1 - xi2).norm();
    if (s > 0 && s < 1 / std::sqrt(K)) throw Error("tube separation must be at least K^{-1/2}");
    const Box T1 = make_tube(sys, xi1, K), T2 = make_tube(sys, xi2, K);
    const int D = T1.dim();
    TubeReport rep;
    rep.method = method;
    rep.single_volume = std::pow(2.0, D) * T1.half.prod();
    if (method == TubeMethod::Exact) {
        if (D > 4) throw MethodInfeasible("exact tube volume needs n + 1 <= 4");
        rep.volume = polytope_volume(
            intersect(box_halfspaces(T1.origin, T1.axes, T1.half), box_halfspaces(T2.origin, T2.axes, T2.half)));
        return rep;
    }
    const std::int64_t block = 1 << 16;
    const std::int64_t nb = (samples + block - 1) / block;
    std::vector<std::int64_t> hits(nb, 0);
    parallel_blocks(samples, block, [&](std::int64_t b, std::int64_t lo, std::int64_t hi) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(b));
        std::uniform_real_distribution<double> u(-1, 1);
        Vec x(D);
        std::int64_t h = 0;
        for (std::int64_t i = lo; i < hi; ++i) {
            for (int k = 0; k < D; ++k) x[k] = u(rng) * T1.half[k];
            if (T2.contains(T1.point(x))) ++h;
        }
        hits[b] = h;
    });
    const double p = static_cast<double>(std::accumulate(hits.begin(), hits.end(), std::int64_t(0))) / samples;
    rep.samples = samples;
    rep.volume = rep.single_volume * p;
    rep.std_error = rep.single_volume * std::sqrt(p * (1 - p) / samples);
    return rep;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error("slope fit needs at least two points");
    double mx = 0, my = 0;
    const double n = static_cast<double>(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

}  // namespace qc
