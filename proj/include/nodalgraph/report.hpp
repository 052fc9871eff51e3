#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nodalgraph {

/// Twelve significant digits, the precision of every numeric CSV field.
inline std::string fmt12(double x) {
    if (x == 0.0) return "0";  // also folds -0
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

    CsvWriter& cell(const std::string& s) {
        pending_.push_back(s);
        return *this;
    }
    CsvWriter& cell(double x) { return cell(fmt12(x)); }
    CsvWriter& cell(std::size_t x) { return cell(std::to_string(x)); }
    CsvWriter& cell(bool b) { return cell(std::string(b ? "true" : "false")); }

    void end_row() {
        if (pending_.size() != columns_) throw std::logic_error("csv row width mismatch");
        row_strings(pending_);
        pending_.clear();
    }

    std::string str() const { return out_.str(); }

private:
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    std::size_t columns_;
    std::vector<std::string> pending_;
    std::ostringstream out_;
};

/// Static scatter of nu_n / n against n with dashed horizontal candidate lines.
inline std::string ratio_svg(const std::vector<std::pair<double, double>>& points, const std::vector<double>& candidates,
                             const std::string& title) {
    constexpr double W = 800, H = 500, L = 60, R = 20, T = 40, B = 50;
    double nmax = 1.0;
    for (const auto& pt : points) nmax = std::max(nmax, pt.first);
    const double ymax = 1.1;
    const auto sx = [&](double x) { return L + (W - L - R) * x / nmax; };
    const auto sy = [&](double y) { return H - B - (H - T - B) * y / ymax; };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H
      << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << sy(0) << "\" x2=\"" << W - R << "\" y2=\"" << sy(0) << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << sy(0) << "\" x2=\"" << L << "\" y2=\"" << T << "\" stroke=\"black\"/>\n";
    for (double c : candidates) {
        s << "<line x1=\"" << L << "\" y1=\"" << fmt12(sy(c)) << "\" x2=\"" << W - R << "\" y2=\"" << fmt12(sy(c))
          << "\" stroke=\"#c44\" stroke-dasharray=\"4 3\" stroke-width=\"0.8\"/>\n";
        s << "<text x=\"" << L - 6 << "\" y=\"" << fmt12(sy(c) + 4) << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
          << fmt12(std::round(c * 1e4) / 1e4) << "</text>\n";
    }
    for (const auto& [n, r] : points)
        s << "<circle cx=\"" << fmt12(sx(n)) << "\" cy=\"" << fmt12(sy(r)) << "\" r=\"1.5\" fill=\"#236\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">n</text>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace nodalgraph
