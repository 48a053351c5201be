#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "fairdyn/common/error.hpp"
#include "fairdyn/harness/harness.hpp"

namespace fairdyn::harness {

namespace {

constexpr double kWidth = 680.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 45.0;
constexpr double kBottom = 55.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
                                    "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  static Range of(const std::vector<double>& v) {
    Range r{*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
    if (!(r.hi > r.lo)) {
      r.lo -= 0.5;
      r.hi += 0.5;
    }
    return r;
  }
  void include(const Range& o) {
    lo = std::min(lo, o.lo);
    hi = std::max(hi, o.hi);
  }
};

class Canvas {
 public:
  explicit Canvas(const std::string& title) {
    s_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
       << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
       << "</text>\n";
  }

  double plot_w() const { return kWidth - kLeft - kRight; }
  double plot_h() const { return kHeight - kTop - kBottom; }
  double px(double x, const Range& r) const { return kLeft + (x - r.lo) / (r.hi - r.lo) * plot_w(); }
  double py(double y, const Range& r) const { return kTop + plot_h() - (y - r.lo) / (r.hi - r.lo) * plot_h(); }

  void axes(const Range& xr, const Range& yr, const std::string& xlabel, const std::string& ylabel,
            bool x_ticks = true) {
    const double x0 = kLeft, y0 = kTop + plot_h();
    s_ << "<g class=\"axes\" stroke=\"black\">\n"
       << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0 + plot_w()) << "\" y2=\""
       << num(y0) << "\"/>\n"
       << "<line x1=\"" << num(x0) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(y0)
       << "\"/>\n</g>\n";
    for (int i = 0; i <= 4; ++i) {
      const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
      const double y = py(yv, yr);
      s_ << "<line x1=\"" << num(x0 - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x0) << "\" y2=\"" << num(y)
         << "\" stroke=\"black\"/><text x=\"" << num(x0 - 7) << "\" y=\"" << num(y + 4)
         << "\" text-anchor=\"end\">" << label(yv) << "</text>\n";
      if (!x_ticks) continue;
      const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
      const double x = px(xv, xr);
      s_ << "<line x1=\"" << num(x) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x) << "\" y2=\"" << num(y0 + 4)
         << "\" stroke=\"black\"/><text x=\"" << num(x) << "\" y=\"" << num(y0 + 18)
         << "\" text-anchor=\"middle\">" << label(xv) << "</text>\n";
    }
    s_ << "<text x=\"" << num(kLeft + plot_w() / 2) << "\" y=\"" << num(kHeight - 12)
       << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n"
       << "<text x=\"16\" y=\"" << num(kTop + plot_h() / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << num(kTop + plot_h() / 2) << ")\">" << escape(ylabel) << "</text>\n";
  }

  void legend(const std::vector<std::pair<std::string, std::string>>& entries) {
    s_ << "<g class=\"legend\">\n";
    double y = kTop + 8;
    for (const auto& [name, color] : entries) {
      const double x = kWidth - kRight + 15;
      s_ << "<line x1=\"" << num(x) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x + 20) << "\" y2=\"" << num(y)
         << "\" stroke=\"" << color << "\" stroke-width=\"3\"/><text x=\"" << num(x + 26) << "\" y=\""
         << num(y + 4) << "\">" << escape(name) << "</text>\n";
      y += 18;
    }
    s_ << "</g>\n";
  }

  std::ostringstream& raw() { return s_; }
  std::string finish() {
    s_ << "</svg>\n";
    return s_.str();
  }

 private:
  std::ostringstream s_;
};

// Diverging blue / white / red scale on [-m, m].
std::string diverging(double v, double m) {
  const double t = m > 0.0 ? std::clamp(v / m, -1.0, 1.0) : 0.0;
  const auto mix = [&](int r, int g, int b) {
    const double a = std::fabs(t);
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(255 + (r - 255) * a)),
                  static_cast<int>(std::lround(255 + (g - 255) * a)), static_cast<int>(std::lround(255 + (b - 255) * a)));
    return std::string(buf);
  };
  return t >= 0.0 ? mix(178, 24, 43) : mix(33, 102, 172);
}

std::string lines(const CsvTable& t, const std::string& title) {
  require(t.header.size() >= 2, ErrorCode::kMalformedCsv, "line plot needs an x column and at least one series");
  const auto x = t.numeric(0);
  std::vector<std::pair<std::string, std::vector<double>>> series;
  for (std::size_t c = 1; c < t.header.size(); ++c) series.emplace_back(t.header[c], t.numeric(c));
  Range yr = Range::of(series.front().second);
  for (const auto& s : series) yr.include(Range::of(s.second));
  const Range xr = Range::of(x);
  Canvas cv(title);
  cv.axes(xr, yr, t.header[0], series.size() == 1 ? series[0].first : "value");
  std::vector<std::pair<std::string, std::string>> entries;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const std::string color = kPalette[k % std::size(kPalette)];
    cv.raw() << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
      cv.raw() << (i ? " " : "") << num(cv.px(x[i], xr)) << ',' << num(cv.py(series[k].second[i], yr));
    }
    cv.raw() << "\"/>\n";
    entries.emplace_back(series[k].first, color);
  }
  cv.legend(entries);
  return cv.finish();
}

std::string heatmap(const CsvTable& t, const std::string& title) {
  require(t.header.size() >= 3, ErrorCode::kMalformedCsv, "heatmap needs row, column and value columns");
  const auto rv = t.numeric(0), colv = t.numeric(1), val = t.numeric(2);
  std::map<double, std::size_t> rows, cols;
  for (double r : rv) rows.emplace(r, 0);
  for (double c : colv) cols.emplace(c, 0);
  std::size_t k = 0;
  for (auto& [v, idx] : rows) idx = k++;
  k = 0;
  for (auto& [v, idx] : cols) idx = k++;
  double m = 0.0;
  for (double v : val) m = std::max(m, std::fabs(v));

  Canvas cv(title);
  const double cw = cv.plot_w() / static_cast<double>(cols.size());
  const double ch = cv.plot_h() / static_cast<double>(rows.size());
  for (std::size_t i = 0; i < val.size(); ++i) {
    const double x = kLeft + cw * static_cast<double>(cols[colv[i]]);
    const double y = kTop + ch * static_cast<double>(rows[rv[i]]);
    cv.raw() << "<rect class=\"cell\" x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cw)
             << "\" height=\"" << num(ch) << "\" fill=\"" << diverging(val[i], m) << "\"><title>" << label(val[i])
             << "</title></rect>\n";
  }
  // Row labels top to bottom, column labels left to right.
  for (const auto& [v, idx] : rows) {
    cv.raw() << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(kTop + ch * (idx + 0.5) + 4)
             << "\" text-anchor=\"end\">" << label(v) << "</text>\n";
  }
  for (const auto& [v, idx] : cols) {
    cv.raw() << "<text x=\"" << num(kLeft + cw * (idx + 0.5)) << "\" y=\"" << num(kTop + cv.plot_h() + 18)
             << "\" text-anchor=\"middle\">" << label(v) << "</text>\n";
  }
  cv.raw() << "<text x=\"" << num(kLeft + cv.plot_w() / 2) << "\" y=\"" << num(kHeight - 12)
           << "\" text-anchor=\"middle\">" << escape(t.header[1]) << "</text>\n"
           << "<text x=\"16\" y=\"" << num(kTop + cv.plot_h() / 2)
           << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << num(kTop + cv.plot_h() / 2) << ")\">"
           << escape(t.header[0]) << "</text>\n";
  // Color bar legend.
  const double bx = kWidth - kRight + 30;
  cv.raw() << "<g class=\"legend\">\n";
  for (int i = 0; i < 20; ++i) {
    const double v = m * (1.0 - 2.0 * i / 19.0);
    cv.raw() << "<rect class=\"scale\" x=\"" << num(bx) << "\" y=\"" << num(kTop + i * 12.0)
             << "\" width=\"18\" height=\"12\" fill=\"" << diverging(v, m) << "\"/>\n";
  }
  cv.raw() << "<text x=\"" << num(bx + 24) << "\" y=\"" << num(kTop + 10) << "\">" << label(m) << "</text>\n"
           << "<text x=\"" << num(bx + 24) << "\" y=\"" << num(kTop + 240) << "\">" << label(-m) << "</text>\n"
           << "<text x=\"" << num(bx) << "\" y=\"" << num(kTop + 262) << "\">" << escape(t.header[2]) << "</text>\n"
           << "</g>\n";
  return cv.finish();
}

std::string bars(const CsvTable& t, const std::string& title) {
  require(t.header.size() >= 2, ErrorCode::kMalformedCsv, "bar plot needs label and value columns");
  const auto v = t.numeric(1);
  Range yr = Range::of(v);
  yr.include({0.0, 0.0});
  Canvas cv(title);
  cv.axes({0.0, 1.0}, yr, t.header[0], t.header[1], false);
  const double bw = cv.plot_w() / static_cast<double>(v.size());
  const double base = cv.py(0.0, yr);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double top = cv.py(v[i], yr);
    const double x = kLeft + bw * (static_cast<double>(i) + 0.15);
    cv.raw() << "<rect class=\"bar\" x=\"" << num(x) << "\" y=\"" << num(std::min(top, base)) << "\" width=\""
             << num(bw * 0.7) << "\" height=\"" << num(std::fabs(base - top)) << "\" fill=\""
             << kPalette[i % std::size(kPalette)] << "\"/>\n"
             << "<text x=\"" << num(x + bw * 0.35) << "\" y=\"" << num(kTop + cv.plot_h() + 18)
             << "\" text-anchor=\"middle\">" << escape(t.rows[i][0]) << "</text>\n";
  }
  std::vector<std::pair<std::string, std::string>> entries;
  for (std::size_t i = 0; i < v.size(); ++i) entries.emplace_back(t.rows[i][0], kPalette[i % std::size(kPalette)]);
  cv.legend(entries);
  return cv.finish();
}

}  // namespace

PlotKind plot_kind_from_string(std::string_view name) {
  if (name == "lines") return PlotKind::kLines;
  if (name == "heatmap") return PlotKind::kHeatmap;
  if (name == "bars") return PlotKind::kBars;
  fail(ErrorCode::kInvalidArgument, "unknown plot kind '" + std::string(name) + "'");
}

std::string emit_svg(const CsvTable& table, PlotKind kind, const std::string& title) {
  require(!table.rows.empty(), ErrorCode::kMalformedCsv, "no data rows");
  switch (kind) {
    case PlotKind::kLines: return lines(table, title);
    case PlotKind::kHeatmap: return heatmap(table, title);
    case PlotKind::kBars: return bars(table, title);
  }
  fail(ErrorCode::kInvalidArgument, "unknown plot kind");
}

}  // namespace fairdyn::harness
