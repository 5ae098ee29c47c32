#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "snic/continuation.hpp"
#include "snic/io.hpp"
#include "snic/manifolds.hpp"
#include "snic/normalform.hpp"
#include "svg.hpp"

using namespace snic;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// ------------------------------------------------------------------ tables

struct Table {
    std::vector<std::string> cols;
    std::vector<std::vector<json>> rows;
};

std::string cell(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_null()) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v.get<double>());
    return buf;
}

void write_csv(const fs::path& p, const Table& t) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ParameterError("cannot write '" + p.string() + "'");
    os << "# schema: v1\n";
    for (std::size_t i = 0; i < t.cols.size(); ++i) os << (i ? "," : "") << t.cols[i];
    os << "\n";
    for (auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell(r[i]);
        os << "\n";
    }
}

void write_jsonl(const fs::path& p, const Table& t) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ParameterError("cannot write '" + p.string() + "'");
    for (auto& r : t.rows) {
        json o = json::object();
        for (std::size_t i = 0; i < r.size(); ++i) o[t.cols[i]] = r[i];
        os << o.dump() << "\n";
    }
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ParameterError("cannot write '" + p.string() + "'");
    os << s;
}

struct Output {
    fs::path dir;
    std::vector<std::string> formats;
    json written = json::array();

    bool wants(const std::string& f) const { return std::find(formats.begin(), formats.end(), f) != formats.end(); }
    void table(const std::string& stem, const Table& t) {
        if (wants("csv")) {
            write_csv(dir / (stem + ".csv"), t);
            written.push_back((dir / (stem + ".csv")).string());
        }
        if (wants("jsonl")) {
            write_jsonl(dir / (stem + ".jsonl"), t);
            written.push_back((dir / (stem + ".jsonl")).string());
        }
    }
    void svg(const std::string& stem, const svg::Canvas& c) {
        if (!wants("svg")) return;
        write_text(dir / (stem + ".svg"), c.str());
        written.push_back((dir / (stem + ".svg")).string());
    }
    void text(const std::string& name, const std::string& s) {
        write_text(dir / name, s);
        written.push_back((dir / name).string());
    }
};

Output make_output(const std::string& dir, const std::vector<std::string>& formats) {
    for (auto& f : formats)
        if (f != "csv" && f != "jsonl" && f != "svg") throw ParameterError("unknown output format '" + f + "'");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ParameterError("cannot create output directory '" + dir + "'");
    return Output{dir, formats};
}

// ---------------------------------------------------------- shared options

struct Base {
    nf::UnfoldingParams p;
    double tol = 1e-9;
};

void add_base(CLI::App* s, Base& b, bool with_tol = true) {
    s->add_option("--rho", b.p.rho, "saddle-node quadratic coefficient")->capture_default_str();
    s->add_option("--ls", b.p.lambda_s, "stable eigenvalue of the saddle")->capture_default_str();
    s->add_option("--lu", b.p.lambda_u, "unstable eigenvalue of the saddle")->capture_default_str();
    s->add_option("--delta", b.p.delta, "section distance at the saddle-node")->capture_default_str();
    s->add_option("--eps", b.p.eps, "section distance at the saddle")->capture_default_str();
    s->add_option("--a1", b.p.a1, "global map slope into the saddle")->capture_default_str();
    s->add_option("--a2", b.p.a2, "global map slope into the saddle-node")->capture_default_str();
    if (with_tol) s->add_option("--tol", b.tol, "curve tolerance of the classifier")->capture_default_str();
}

void base_json(json& j, const Base& b) {
    j["rho"] = b.p.rho, j["ls"] = b.p.lambda_s, j["lu"] = b.p.lambda_u, j["delta"] = b.p.delta;
    j["eps"] = b.p.eps, j["a1"] = b.p.a1, j["a2"] = b.p.a2, j["tol"] = b.tol;
}

Params parse_params(const std::vector<std::string>& kv) {
    Params out;
    for (auto& s : kv) {
        auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ParameterError("expected key=value, got '" + s + "'");
        std::string k = s.substr(0, eq), v = s.substr(eq + 1);
        try {
            std::size_t used = 0;
            double d = std::stod(v, &used);
            if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
            out[k] = d;
        } catch (const std::exception&) {
            throw ParameterError("parameter '" + k + "' is not a number: '" + v + "'");
        }
    }
    return out;
}

json resolved_params(const PlanarField& f) {
    json a = json::array();
    char buf[64];
    for (auto& [k, d] : f.schema()) {
        (void)d;
        std::snprintf(buf, sizeof buf, "%.17g", f.param(k));
        a.push_back(k + "=" + buf);
    }
    return a;
}

Box box_from(const std::vector<double>& v) {
    if (v.size() != 4) throw ParameterError("box needs x0,x1,y0,y1");
    if (!(v[0] < v[1] && v[2] < v[3])) throw ParameterError("box must have x0 < x1 and y0 < y1");
    return {v[0], v[1], v[2], v[3]};
}

json opt_value(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ------------------------------------------------------------------ classify

struct ClassifyCmd {
    double mu1 = 0, mu2 = 0, mu3 = 0;
    Base base;
};

int run_classify(const ClassifyCmd& c) {
    json cfg{{"command", "classify"}, {"mu1", c.mu1}, {"mu2", c.mu2}, {"mu3", c.mu3}};
    base_json(cfg, c.base);
    std::cout << cfg.dump() << std::endl;
    nf::UnfoldingParams p = c.base.p.with_mu(c.mu1, c.mu2, c.mu3);
    p.validate();
    auto lt = nf::classify_loop_type(p.rho, p.lambda_s, p.lambda_u);
    auto r = nf::classify_regime(p, c.base.tol);
    double hp2 = std::numeric_limits<double>::quiet_NaN(), r1 = hp2;
    try {
        hp2 = nf::curve_homoclinic_p2(c.mu3, p);
    } catch (const RangeError&) {
    }
    try {
        r1 = nf::curve_r1_zero(c.mu2, p);
    } catch (const RangeError&) {
    }
    json out{{"region", std::string(nf::to_string(r.region))},
             {"g1", std::string(nf::to_string(r.g1))},
             {"g2", std::string(nf::to_string(r.g2))},
             {"loop_type", std::string(nf::to_string(lt))},
             {"curves", {{"homoclinic_p2_mu2", opt_value(hp2)}, {"r1_zero_mu3", opt_value(r1)}}}};
    std::cout << out.dump() << std::endl;
    return 0;
}

// -------------------------------------------------------------------- slice

std::vector<Vec2> hp2_curve(double mu1, const nf::UnfoldingParams& p, double lo, double hi) {
    std::vector<Vec2> pts;
    for (int k = 0; k <= 800; ++k) {
        double m3 = lo + (hi - lo) * k / 800.0;
        try {
            pts.push_back({nf::curve_homoclinic_p2(m3, p.with_mu(mu1, 0, 0)), m3});
        } catch (const Error&) {
        }
    }
    return pts;
}

std::vector<Vec2> r1_curve(double mu1, const nf::UnfoldingParams& p, double lo, double hi) {
    std::vector<Vec2> pts;
    for (int k = 0; k <= 800; ++k) {
        double m2 = lo + (hi - lo) * k / 800.0;
        try {
            pts.push_back({m2, nf::curve_r1_zero(m2, p.with_mu(mu1, 0, 0))});
        } catch (const Error&) {
        }
    }
    return pts;
}

struct SliceCmd {
    double mu1 = 0;
    std::vector<double> grid{-0.05, 0.05, -0.05, 0.05};
    int n = 101;
    unsigned threads = 0;
    std::string out = ".";
    std::vector<std::string> format{"csv", "svg"};
    std::optional<double> tol;  // default: half the grid spacing
    Base base;
};

int run_slice(SliceCmd c) {
    if (c.grid.size() != 4 || !(c.grid[0] < c.grid[1] && c.grid[2] < c.grid[3]))
        throw ParameterError("grid needs lo2,hi2,lo3,hi3 with lo < hi");
    if (c.n < 2) throw ParameterError("slice needs n >= 2");
    c.base.tol = c.tol ? *c.tol : 0.5 * std::min(c.grid[1] - c.grid[0], c.grid[3] - c.grid[2]) / (c.n - 1);
    json cfg{{"command", "slice"}, {"mu1", c.mu1}, {"grid", c.grid}, {"n", c.n}};
    base_json(cfg, c.base);
    cfg["out"] = c.out, cfg["format"] = c.format;
    std::cout << cfg.dump() << std::endl;
    nf::Grid2 g{c.grid[0], c.grid[1], c.grid[2], c.grid[3], c.n};
    auto nodes = nf::slice_atlas(c.mu1, g, c.base.p, c.base.tol, c.threads);
    Output o = make_output(c.out, c.format);
    Table t{{"mu2", "mu3", "region", "g1", "g2"}, {}};
    std::set<std::string> labels;
    for (auto& n : nodes) {
        std::string r(nf::to_string(n.label.region));
        labels.insert(r);
        t.rows.push_back({n.mu2, n.mu3, r, std::string(nf::to_string(n.label.g1)), std::string(nf::to_string(n.label.g2))});
    }
    o.table("slice", t);
    if (o.wants("svg")) {
        svg::Canvas cv(g.lo2, g.hi2, g.lo3, g.hi3, 640, 640);
        double dx = (g.hi2 - g.lo2) / (g.n - 1), dy = (g.hi3 - g.lo3) / (g.n - 1);
        for (auto& n : nodes) cv.cell({n.mu2, n.mu3}, dx, dy, svg::palette(static_cast<int>(n.label.region)));
        cv.polyline(hp2_curve(c.mu1, c.base.p, g.lo3, g.hi3), "black", 2);
        cv.polyline(r1_curve(c.mu1, c.base.p, g.lo2, g.hi2), "black", 2, "6,3");
        cv.axes("mu2", "mu3");
        o.svg("slice", cv);
    }
    json res{{"labels", json(std::vector<std::string>(labels.begin(), labels.end()))}, {"outputs", o.written}};
    std::cout << res.dump() << std::endl;
    return 0;
}

// ------------------------------------------------------------------- sphere

struct SphereCmd {
    double radius = 0.01;
    int samples = 5000;
    unsigned threads = 0;
    std::string out = ".";
    std::vector<std::string> format{"csv", "svg"};
    Base base;
};

int run_sphere(const SphereCmd& c) {
    json cfg{{"command", "sphere"}, {"radius", c.radius}, {"samples", c.samples}};
    base_json(cfg, c.base);
    cfg["out"] = c.out, cfg["format"] = c.format;
    std::cout << cfg.dump() << std::endl;
    auto pts = nf::sphere_atlas(c.radius, c.samples, c.base.p, c.base.tol, c.threads);
    Output o = make_output(c.out, c.format);
    Table t{{"mu1", "mu2", "mu3", "px", "py", "region", "g1", "g2"}, {}};
    std::set<std::string> labels;
    for (auto& q : pts) {
        std::string r(nf::to_string(q.label.region));
        labels.insert(r);
        t.rows.push_back({q.mu1, q.mu2, q.mu3, q.px, q.py, r, std::string(nf::to_string(q.label.g1)),
                          std::string(nf::to_string(q.label.g2))});
    }
    o.table("sphere", t);
    if (o.wants("svg")) {
        svg::Canvas cv(-3, 3, -3, 3, 640, 640);
        for (auto& q : pts)
            if (std::abs(q.px) < 3 && std::abs(q.py) < 3)
                cv.circle({q.px, q.py}, 2, svg::palette(static_cast<int>(q.label.region)), "none");
        std::vector<Vec2> unit;
        for (int k = 0; k <= 200; ++k) unit.push_back({std::cos(2 * M_PI * k / 200), std::sin(2 * M_PI * k / 200)});
        cv.polyline(unit, "black", 1, "4,3");
        cv.axes("stereographic 1", "stereographic 2");
        o.svg("sphere", cv);
    }
    json res{{"labels", json(std::vector<std::string>(labels.begin(), labels.end()))}, {"outputs", o.written}};
    std::cout << res.dump() << std::endl;
    return 0;
}

// ----------------------------------------------------------------- portrait

struct PortraitCmd {
    std::string model = "polynomial";
    std::vector<std::string> params;
    std::vector<double> ic;
    double tmax = 50;
    std::vector<double> box{-6, 6, -4, 4};
    double horizon = 30;
    bool reverse = false;
    bool no_separatrices = false;
    std::string out = ".";
    std::vector<std::string> format{"csv", "svg"};
};

std::vector<Vec2> clipped(const Trajectory& tr, const Box& b) {
    std::vector<Vec2> pts;
    double padx = 0.25 * (b.x1 - b.x0), pady = 0.25 * (b.y1 - b.y0);
    Box outer{b.x0 - padx, b.x1 + padx, b.y0 - pady, b.y1 + pady};
    for (auto& s : tr.samples) {
        pts.push_back(s.x);
        if (!outer.contains(s.x)) break;
    }
    return pts;
}

int run_portrait(const PortraitCmd& c) {
    PlanarField field = io::load_model(c.model, parse_params(c.params));
    json cfg{{"command", "portrait"}, {"model", c.model}, {"params", resolved_params(field)}, {"ic", c.ic},
             {"tmax", c.tmax}, {"box", c.box}, {"horizon", c.horizon}, {"reverse", c.reverse},
             {"no-separatrices", c.no_separatrices}, {"out", c.out}, {"format", c.format}};
    std::cout << cfg.dump() << std::endl;
    Box box = box_from(c.box);
    if (c.ic.size() % 2) throw ParameterError("initial conditions come in x,y pairs");
    if (!(c.tmax > 0) || !(c.horizon > 0)) throw ParameterError("tmax and horizon must be positive");
    PlanarField g = c.reverse ? field.reversed() : field;
    Output o = make_output(c.out, c.format);

    auto eqs = find_all_equilibria(g, box, 30);
    Table te{{"id", "x", "y", "class", "re1", "im1", "re2", "im2"}, {}};
    for (std::size_t i = 0; i < eqs.size(); ++i) {
        auto& e = eqs[i];
        te.rows.push_back({static_cast<long long>(i), e.position.x, e.position.y, std::string(to_string(e.cls)),
                           e.eigen.values[0].real(), e.eigen.values[0].imag(), e.eigen.values[1].real(),
                           e.eigen.values[1].imag()});
    }
    o.table("equilibria", te);

    struct Curve {
        std::string kind;
        std::vector<Vec2> pts;
        std::vector<double> t;
    };
    std::vector<Curve> curves;
    for (std::size_t k = 0; k + 1 < c.ic.size(); k += 2) {
        auto tr = integrate(g, {c.ic[k], c.ic[k + 1]}, 0, c.tmax);
        Curve cu{"trajectory", clipped(tr, box), {}};
        for (std::size_t i = 0; i < cu.pts.size(); ++i) cu.t.push_back(tr.samples[i].t);
        curves.push_back(std::move(cu));
    }
    if (!c.no_separatrices) {
        for (auto& e : eqs) {
            if (!e.eigen.real) continue;
            std::vector<Flavor> fl;
            if (e.cls == EqClass::Saddle) fl = {Flavor::unstable, Flavor::stable};
            if (e.cls == EqClass::SaddleNodeCandidate) {
                if (e.lambda(0) < -1e-6 * e.jacobian.norm()) fl.push_back(Flavor::stable);
                if (e.lambda(1) > 1e-6 * e.jacobian.norm()) fl.push_back(Flavor::unstable);
            }
            for (Flavor f : fl)
                for (Branch b : {Branch::plus, Branch::minus}) {
                    auto s = compute_separatrix(g, e, f, b, 1e-5, c.horizon);
                    Curve cu{f == Flavor::unstable ? "unstable" : "stable", clipped(s.trajectory, box), {}};
                    for (std::size_t i = 0; i < cu.pts.size(); ++i) cu.t.push_back(s.trajectory.samples[i].t);
                    curves.push_back(std::move(cu));
                }
            if (e.cls == EqClass::SaddleNodeCandidate) {
                Branch b = center_unstable_branch(g, e);
                auto s = compute_separatrix(g, e, Flavor::center_unstable, b, 1e-4, c.horizon);
                Curve cu{"center", clipped(s.trajectory, box), {}};
                for (std::size_t i = 0; i < cu.pts.size(); ++i) cu.t.push_back(s.trajectory.samples[i].t);
                curves.push_back(std::move(cu));
            }
        }
    }
    Table tp{{"kind", "id", "t", "x", "y"}, {}};
    for (std::size_t i = 0; i < curves.size(); ++i)
        for (std::size_t k = 0; k < curves[i].pts.size(); ++k)
            tp.rows.push_back({curves[i].kind, static_cast<long long>(i), curves[i].t[k], curves[i].pts[k].x,
                               curves[i].pts[k].y});
    o.table("portrait", tp);

    if (o.wants("svg")) {
        svg::Canvas cv(box.x0, box.x1, box.y0, box.y1);
        for (auto& cu : curves) {
            std::string col = cu.kind == "unstable" ? "#e7298a" : cu.kind == "stable" ? "#1f78b4"
                              : cu.kind == "center"  ? "#e6ab02"
                                                     : "#444444";
            std::vector<Vec2> in;
            for (auto& p : cu.pts) in.push_back({std::clamp(p.x, box.x0, box.x1), std::clamp(p.y, box.y0, box.y1)});
            cv.polyline(in, col, cu.kind == "trajectory" ? 1.0 : 1.6);
        }
        for (auto& e : eqs) {
            bool stable = e.eigen.values[0].real() < 0 && e.eigen.values[1].real() < 0;
            std::string fill = e.cls == EqClass::Saddle ? "#999999" : e.cls == EqClass::SaddleNodeCandidate ? "#e6ab02"
                               : stable                  ? "black"
                                                         : "white";
            cv.circle(e.position, 5, fill, "black", std::string(to_string(e.cls)));
        }
        cv.axes("x", "y");
        o.svg("portrait", cv);
    }
    json eqj = json::array();
    for (auto& e : eqs)
        eqj.push_back({{"x", e.position.x}, {"y", e.position.y}, {"class", std::string(to_string(e.cls))}});
    json res{{"equilibria", eqj}, {"curves", curves.size()}, {"outputs", o.written}};
    std::cout << res.dump() << std::endl;
    return 0;
}

// ----------------------------------------------------------------- continue

struct ContinueCmd {
    std::string model = "polynomial";
    std::vector<std::string> params;
    std::string param;
    std::vector<double> range;
    std::vector<double> box{-20, 20, -20, 20};
    int grid_n = 20;
    double hmax = 0.05;
    bool no_periodic = false;
    int samples = 101;
    std::vector<double> section{0, 0, 0, 1};
    std::vector<double> seed;
    double d_tol = 0.05;
    double period_threshold = 100;
    std::string out = ".";
    std::vector<std::string> format{"csv", "svg"};
};

int run_continue(const ContinueCmd& c) {
    PlanarField field = io::load_model(c.model, parse_params(c.params));
    json cfg{{"command", "continue"}, {"model", c.model}, {"params", resolved_params(field)}, {"param", c.param},
             {"range", c.range}, {"box", c.box}, {"grid-n", c.grid_n}, {"hmax", c.hmax},
             {"no-periodic", c.no_periodic}, {"samples", c.samples}, {"section", c.section}, {"seed", c.seed},
             {"d-tol", c.d_tol}, {"period-threshold", c.period_threshold}, {"out", c.out}, {"format", c.format}};
    std::cout << cfg.dump() << std::endl;
    if (c.range.size() != 2) throw ParameterError("range needs two values");
    if (c.section.size() != 4) throw ParameterError("section needs px,py,nx,ny");
    if (c.seed.size() % 2) throw ParameterError("seeds come in x,y pairs");
    ContinuationOptions co;
    co.box = box_from(c.box);
    co.grid_n = c.grid_n;
    co.hmax = c.hmax;
    auto branches = continue_equilibria(field, c.param, {c.range[0], c.range[1]}, co);
    Output o = make_output(c.out, c.format);

    Table tb{{"branch", "index", c.param, "x", "y", "re1", "im1", "re2", "im2", "test_fold", "test_hopf", "stable"}, {}};
    for (std::size_t b = 0; b < branches.size(); ++b)
        for (std::size_t i = 0; i < branches[b].points.size(); ++i) {
            auto& p = branches[b].points[i];
            tb.rows.push_back({static_cast<long long>(b), static_cast<long long>(i), p.param, p.state.x, p.state.y,
                               p.eigenvalues[0].real(), p.eigenvalues[0].imag(), p.eigenvalues[1].real(),
                               p.eigenvalues[1].imag(), p.test_fold, p.test_hopf, p.stable});
        }
    o.table("branch", tb);

    json events = json::array();
    for (auto& e : all_events(branches))
        events.push_back({{"kind", to_string(e.kind)}, {"param", e.param}, {"x", e.state.x}, {"y", e.state.y},
                          {"branch", e.branch}});

    std::vector<PeriodicBranch> windows;
    json cycles = json::array();
    std::string periodic_note;
    if (!c.no_periodic) {
        PeriodicOptions po;
        po.samples = c.samples;
        po.box = co.box;
        po.period_threshold = c.period_threshold;
        for (std::size_t k = 0; k + 1 < c.seed.size(); k += 2) po.seeds.push_back({c.seed[k], c.seed[k + 1]});
        SectionLine sec({c.section[0], c.section[1]}, {c.section[2], c.section[3]},
                        std::numeric_limits<double>::infinity(), 1);
        try {
            windows = track_periodic(field, c.param, {c.range[0], c.range[1]}, sec, po);
            EndClassOptions eo;
            eo.d_tol = c.d_tol;
            eo.period_threshold = c.period_threshold;
            label_ends(field, c.param, windows, branches, eo);
        } catch (const NoCycle& e) {
            periodic_note = e.what();
        }
        Table tc{{"window", c.param, "xmin", "ymin", "xmax", "ymax", "period"}, {}};
        for (std::size_t w = 0; w < windows.size(); ++w) {
            for (auto& s : windows[w].samples)
                tc.rows.push_back({static_cast<long long>(w), s.param, s.min.x, s.min.y, s.max.x, s.max.y, s.period});
            json ends = json::array();
            for (auto& e : windows[w].ends) {
                ends.push_back({{"param", e.param}, {"lost_param", e.lost_param}, {"period", e.period},
                                {"label", to_string(e.label)}, {"reason", to_string(e.reason)},
                                {"extended_precision", e.extended_precision}});
                if (e.label == EndLabel::SNIC || e.label == EndLabel::Homoclinic)
                    events.push_back({{"kind", e.label == EndLabel::SNIC ? "SNIC" : "HC"}, {"param", e.param},
                                      {"period", e.period}, {"window", w}});
            }
            cycles.push_back({{"window", w}, {"ends", ends}});
        }
        o.table("periodic", tc);
    }
    json ev{{"param", c.param}, {"events", events}, {"cycles", cycles}};
    if (!periodic_note.empty()) ev["periodic_note"] = periodic_note;
    o.text("events.json", ev.dump(2) + "\n");

    if (o.wants("svg")) {
        double lo = std::min(c.range[0], c.range[1]), hi = std::max(c.range[0], c.range[1]);
        double ylo = 1e300, yhi = -1e300;
        for (auto& b : branches)
            for (auto& p : b.points) ylo = std::min(ylo, p.state.x), yhi = std::max(yhi, p.state.x);
        for (auto& w : windows)
            for (auto& s : w.samples) ylo = std::min(ylo, s.min.x), yhi = std::max(yhi, s.max.x);
        if (!(yhi > ylo)) ylo -= 1, yhi += 1;
        double pad = 0.05 * (yhi - ylo);
        svg::Canvas cv(lo, hi, ylo - pad, yhi + pad);
        for (auto& b : branches) {
            std::vector<Vec2> seg;
            bool st = !b.points.empty() && b.points.front().stable;
            for (auto& p : b.points) {
                if (p.stable != st && !seg.empty()) {
                    Vec2 last = seg.back();
                    cv.polyline(seg, "black", 1.5, st ? "" : "5,3");
                    seg = {last};
                    st = p.stable;
                }
                seg.push_back({p.param, p.state.x});
            }
            cv.polyline(seg, "black", 1.5, st ? "" : "5,3");
        }
        for (auto& w : windows) {
            std::vector<Vec2> mx, mn;
            for (auto& s : w.samples) mx.push_back({s.param, s.max.x}), mn.push_back({s.param, s.min.x});
            cv.polyline(mx, "#d62728", 1.5);
            cv.polyline(mn, "#1f77b4", 1.5);
        }
        for (auto& e : all_events(branches))
            cv.circle({e.param, e.state.x}, 4, e.kind == EventKind::SN ? "black" : "#888888", "black", to_string(e.kind));
        cv.axes(c.param, "x");
        o.svg("branch", cv);
    }
    int sn = 0, hb = 0;
    for (auto& e : all_events(branches)) (e.kind == EventKind::SN ? sn : hb)++;
    json res{{"branches", branches.size()}, {"SN", sn}, {"HB", hb}, {"windows", windows.size()}, {"outputs", o.written}};
    std::cout << res.dump() << std::endl;
    return 0;
}

// ------------------------------------------------------------------- config

// a resolved config echo, turned back into arguments
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::vector<std::string> out, rest;
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (path.empty()) return args;
    json j = io::read_json_file(path);
    if (!j.is_object() || !j.contains("command") || !j["command"].is_string())
        throw ParameterError("config needs a 'command' string");
    out.push_back(j["command"].get<std::string>());
    std::set<std::string> given;  // explicit arguments win over the file
    for (auto& r : rest) {
        if (r.rfind("--", 0) != 0) continue;
        auto eq = r.find('=');
        given.insert(eq == std::string::npos ? r.substr(2) : r.substr(2, eq - 2));
    }
    for (auto& [k, v] : j.items()) {
        if (k == "command" || v.is_null() || given.count(k)) continue;
        if (v.is_boolean()) {
            if (v.get<bool>()) out.push_back("--" + k);
        } else if (v.is_array()) {
            if (v.empty()) continue;
            std::string joined;
            for (std::size_t i = 0; i < v.size(); ++i)
                joined += (i ? "," : "") + (v[i].is_string() ? v[i].get<std::string>() : v[i].dump());
            out.push_back("--" + k + "=" + joined);
        } else if (v.is_string()) {
            out.push_back("--" + k + "=" + v.get<std::string>());
        } else {
            out.push_back("--" + k + "=" + v.dump());
        }
    }
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

int fail(int code, const std::string& type, const std::string& msg) {
    std::cerr << json{{"error", type}, {"message", msg}, {"exit_code", code}}.dump() << std::endl;
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planar SNICeroclinic toolkit: normal-form regimes, phase portraits, continuation"};
    app.require_subcommand(1);

    ClassifyCmd cc;
    auto* cl = app.add_subcommand("classify", "regime of one unfolding point (JSON on stdout)");
    cl->add_option("--mu1", cc.mu1, "saddle-node unfolding")->required();
    cl->add_option("--mu2", cc.mu2, "splitting at the saddle")->required();
    cl->add_option("--mu3", cc.mu3, "splitting at the saddle-node")->required();
    add_base(cl, cc.base);

    SliceCmd sc;
    auto* sl = app.add_subcommand("slice", "regime atlas on a (mu2, mu3) grid at fixed mu1");
    sl->add_option("--mu1", sc.mu1)->required();
    sl->add_option("--grid", sc.grid, "lo2,hi2,lo3,hi3")->delimiter(',')->expected(4)->capture_default_str();
    sl->add_option("--n", sc.n, "nodes per axis")->capture_default_str();
    sl->add_option("--threads", sc.threads, "0: all cores")->capture_default_str();
    sl->add_option("--out", sc.out, "output directory")->capture_default_str();
    sl->add_option("--format", sc.format, "csv,jsonl,svg")->delimiter(',')->capture_default_str();
    sl->add_option("--tol", sc.tol, "curve tolerance (default: half the grid spacing)");
    add_base(sl, sc.base, false);

    PortraitCmd pc;
    auto* po = app.add_subcommand("portrait", "phase portrait with equilibria and separatrices");
    po->add_option("--model", pc.model, "builtin name or model JSON file")->capture_default_str();
    po->add_option("--params", pc.params, "key=value overrides")->delimiter(',');
    po->add_option("--ic", pc.ic, "initial conditions x,y[,x,y...]")->delimiter(',');
    po->add_option("--tmax", pc.tmax, "trajectory length")->capture_default_str();
    po->add_option("--box", pc.box, "x0,x1,y0,y1")->delimiter(',')->expected(4)->capture_default_str();
    po->add_option("--horizon", pc.horizon, "separatrix integration time")->capture_default_str();
    po->add_flag("--reverse", pc.reverse, "reverse time");
    po->add_flag("--no-separatrices", pc.no_separatrices);
    po->add_option("--out", pc.out)->capture_default_str();
    po->add_option("--format", pc.format, "csv,jsonl,svg")->delimiter(',')->capture_default_str();

    ContinueCmd kc;
    auto* co = app.add_subcommand("continue", "equilibrium branches, fold/Hopf events and cycle windows");
    co->add_option("--model", kc.model, "builtin name or model JSON file")->capture_default_str();
    co->add_option("--params", kc.params, "key=value overrides")->delimiter(',');
    co->add_option("--param", kc.param, "continuation parameter")->required();
    co->add_option("--range", kc.range, "lo,hi")->delimiter(',')->expected(2)->required();
    co->add_option("--box", kc.box, "equilibrium search box x0,x1,y0,y1")->delimiter(',')->expected(4)->capture_default_str();
    co->add_option("--grid-n", kc.grid_n, "equilibrium seed grid")->capture_default_str();
    co->add_option("--hmax", kc.hmax, "largest arclength step")->capture_default_str();
    co->add_flag("--no-periodic", kc.no_periodic, "skip cycle tracking");
    co->add_option("--samples", kc.samples, "parameter samples for cycle tracking")->capture_default_str();
    co->add_option("--section", kc.section, "px,py,nx,ny")->delimiter(',')->expected(4)->capture_default_str();
    co->add_option("--seed", kc.seed, "cold-start states x,y[,x,y...]")->delimiter(',');
    co->add_option("--d-tol", kc.d_tol, "endpoint proximity")->capture_default_str();
    co->add_option("--period-threshold", kc.period_threshold, "blow-up period")->capture_default_str();
    co->add_option("--out", kc.out)->capture_default_str();
    co->add_option("--format", kc.format, "csv,jsonl,svg")->delimiter(',')->capture_default_str();

    SphereCmd sp;
    auto* sh = app.add_subcommand("sphere", "regime labels on a small sphere around the origin");
    sh->add_option("--radius", sp.radius)->capture_default_str();
    sh->add_option("--samples", sp.samples)->capture_default_str();
    sh->add_option("--threads", sp.threads, "0: all cores")->capture_default_str();
    sh->add_option("--out", sp.out)->capture_default_str();
    sh->add_option("--format", sp.format, "csv,jsonl,svg")->delimiter(',')->capture_default_str();
    add_base(sh, sp.base);

    std::vector<std::string> args;
    try {
        args = expand_config(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const Error& e) {
        return fail(2, "ParameterError", e.what());
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(2, "UsageError", e.what());
    }

    try {
        if (cl->parsed()) return run_classify(cc);
        if (sl->parsed()) return run_slice(sc);
        if (po->parsed()) return run_portrait(pc);
        if (co->parsed()) return run_continue(kc);
        if (sh->parsed()) return run_sphere(sp);
    } catch (const ParameterError& e) {
        return fail(2, "ParameterError", e.what());
    } catch (const RangeError& e) {
        return fail(2, "RangeError", e.what());
    } catch (const DomainError& e) {
        return fail(2, "DomainError", e.what());
    } catch (const DegeneracyError& e) {
        return fail(2, "DegeneracyError", e.what());
    } catch (const SyntaxError& e) {
        return fail(2, "SyntaxError", e.what());
    } catch (const NumericalError& e) {
        return fail(3, "NumericalError", e.what());
    } catch (const PreconditionError& e) {
        return fail(3, "PreconditionError", e.what());
    } catch (const std::exception& e) {
        return fail(3, "Error", e.what());
    }
    return 2;
}
