#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "snic/core.hpp"

namespace snic::svg {

// data box mapped onto a fixed canvas, y up
class Canvas {
public:
    Canvas(double x0, double x1, double y0, double y1, int w = 640, int h = 480, int margin = 50)
        : x0_(x0), x1_(x1), y0_(y0), y1_(y1), w_(w), h_(h), m_(margin) {}

    double px(double x) const { return m_ + (x - x0_) / (x1_ - x0_) * (w_ - 2 * m_); }
    double py(double y) const { return h_ - m_ - (y - y0_) / (y1_ - y0_) * (h_ - 2 * m_); }

    void polyline(const std::vector<Vec2>& pts, const std::string& color, double width = 1.2,
                  const std::string& dash = "") {
        if (pts.size() < 2) return;
        body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width << "\"";
        if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
        body_ << " points=\"";
        char buf[64];
        for (auto& p : pts) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(p.x), py(p.y));
            body_ << buf;
        }
        body_ << "\"/>\n";
    }
    void circle(Vec2 p, double r, const std::string& fill, const std::string& stroke = "black",
                const std::string& cls = "") {
        char buf[256];
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.1f\" fill=\"%s\" stroke=\"%s\"", px(p.x),
                      py(p.y), r, fill.c_str(), stroke.c_str());
        body_ << buf;
        if (!cls.empty()) body_ << " class=\"" << cls << "\"";
        body_ << "/>\n";
    }
    // cell centred on p with data-space size (dx, dy)
    void cell(Vec2 p, double dx, double dy, const std::string& fill) {
        char buf[256];
        double a = px(p.x - dx / 2), b = py(p.y + dy / 2);
        double w = px(p.x + dx / 2) - a, h = py(p.y - dy / 2) - b;
        std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\"/>\n", a,
                      b, w + 0.3, h + 0.3, fill.c_str());
        body_ << buf;
    }
    void text(double x, double y, const std::string& s, int size = 12) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"%d\" font-family=\"sans-serif\">", x, y,
                      size);
        body_ << buf << s << "</text>\n";
    }
    void axes(const std::string& xl, const std::string& yl) {
        char buf[512];
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" stroke=\"black\"/>\n", m_, m_,
                      w_ - 2 * m_, h_ - 2 * m_);
        body_ << buf;
        auto num = [](double v) {
            char b[32];
            std::snprintf(b, sizeof b, "%.4g", v);
            return std::string(b);
        };
        text(m_, h_ - m_ + 16, num(x0_), 10);
        text(w_ - m_ - 24, h_ - m_ + 16, num(x1_), 10);
        text(4, h_ - m_, num(y0_), 10);
        text(4, m_ + 8, num(y1_), 10);
        text(w_ / 2.0, h_ - 12, xl);
        text(4, h_ / 2.0, yl);
    }
    std::string str() const {
        std::ostringstream os;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\" viewBox=\"0 0 "
           << w_ << " " << h_ << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           << body_.str() << "</svg>\n";
        return os.str();
    }

private:
    double x0_, x1_, y0_, y1_;
    int w_, h_, m_;
    std::ostringstream body_;
};

inline const std::string& palette(int i) {
    static const std::vector<std::string> p{"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d",
                                            "#666666", "#1f78b4", "#b2df8a", "#fb9a99", "#fdbf6f", "#cab2d6", "#ffff99"};
    return p[static_cast<std::size_t>(i) % p.size()];
}

}  // namespace snic::svg
