#include "quadcone/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "quadcone/types.hpp"

#ifndef QUADCONE_VERSION
#define QUADCONE_VERSION "unknown"
#endif

namespace qc {

namespace {
std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<')
            o += "&lt;";
        else if (c == '>')
            o += "&gt;";
        else if (c == '&')
            o += "&amp;";
        else
            o += c;
    }
    return o;
}
}  // namespace

std::string to_csv(const Table& t) {
    std::ostringstream os;
    for (size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
    os << "\n";
    for (const auto& r : t.rows) {
        for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << num(r[i]);
        os << "\n";
    }
    return os.str();
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw Error("log-log fit needs at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0) || !(y[i] > 0)) throw Error("log-log fit needs positive data");
        mx += std::log(x[i]) / n;
        my += std::log(y[i]) / n;
    }
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    if (sxx == 0) throw Error("log-log fit needs distinct x values");
    LogLogFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

std::string loglog_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series) {
    const double W = 640, H = 420, L = 70, R = 170, T = 40, B = 50;
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0) || !(s.y[i] > 0)) continue;
            xlo = std::min(xlo, std::log10(s.x[i]));
            xhi = std::max(xhi, std::log10(s.x[i]));
            ylo = std::min(ylo, std::log10(s.y[i]));
            yhi = std::max(yhi, std::log10(s.y[i]));
        }
    if (xlo > xhi) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    if (xhi - xlo < 1e-9) xlo -= 0.5, xhi += 0.5;
    if (yhi - ylo < 1e-9) ylo -= 0.5, yhi += 0.5;
    const double padx = 0.05 * (xhi - xlo), pady = 0.08 * (yhi - ylo);
    xlo -= padx, xhi += padx, ylo -= pady, yhi += pady;
    auto px = [&](double v) { return L + (std::log10(v) - xlo) / (xhi - xlo) * (W - L - R); };
    auto py = [&](double v) { return H - B - (std::log10(v) - ylo) / (yhi - ylo) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">log10 "
       << escape(xlabel) << "</text>\n";
    os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << (T + H - B) / 2
       << ")\" text-anchor=\"middle\">log10 " << escape(ylabel) << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = xlo + (xhi - xlo) * k / 4, yv = ylo + (yhi - ylo) * k / 4;
        const double X = L + (W - L - R) * k / 4, Y = H - B - (H - T - B) * k / 4;
        os << "<text x=\"" << X << "\" y=\"" << H - B + 15 << "\" text-anchor=\"middle\" font-size=\"10\">"
           << short_num(xv) << "</text>\n";
        os << "<text x=\"" << L - 5 << "\" y=\"" << Y + 3 << "\" text-anchor=\"end\" font-size=\"10\">" << short_num(yv)
           << "</text>\n";
    }
    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* col = colors[si % 6];
        std::vector<double> fx, fy;
        std::ostringstream pts;
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0) || !(s.y[i] > 0)) continue;
            fx.push_back(s.x[i]);
            fy.push_back(s.y[i]);
            pts << px(s.x[i]) << "," << py(s.y[i]) << " ";
            os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
        }
        os << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << col << "\"/>\n";
        std::string label = s.label;
        if (fx.size() >= 2) {
            bool distinct = false;
            for (double v : fx) distinct |= v != fx[0];
            if (distinct) label += " (slope " + short_num(fit_loglog(fx, fy).slope) + ")";
        }
        os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 15 + 18 * si << "\" font-size=\"11\" fill=\"" << col << "\">"
           << escape(label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_text(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << content;
    if (!f) throw Error("write failed for " + path);
}

std::string version_string() { return QUADCONE_VERSION; }

}  // namespace qc
