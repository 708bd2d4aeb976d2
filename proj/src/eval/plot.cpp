#include "spot/eval/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"

namespace spot::eval {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
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

std::string fmt(double v, int precision = 6) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

// Round step for about `target` ticks over [lo, hi].
double nice_step(double lo, double hi, int target) {
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  const double m = r < 1.5 ? 1 : r < 3 ? 2 : r < 7 ? 5 : 10;
  return m * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
  void pad() {
    if (!valid()) {
      lo = 0;
      hi = 1;
    } else if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double d = std::max(0.5, std::abs(hi) * 0.1);
      lo -= d;
      hi += d;
    }
  }
};

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError("csv has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    try {
      std::size_t used = 0;
      const double v = std::stod(r[c], &used);
      out.push_back(used == r[c].size() ? v : std::numeric_limits<double>::quiet_NaN());
    } catch (const std::exception&) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError("csv line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                       " cells, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError("csv is empty");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file_bytes(path)); }

std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& o) {
  const double left = 72, right = 24 + (series.size() > 1 ? 150 : 0), top = o.title.empty() ? 20 : 40, bottom = 52;
  const double pw = o.width - left - right, ph = o.height - top - bottom;
  auto ty = [&](double y) { return o.log_y ? std::log10(y) : y; };
  auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!o.log_y || y > 0); };

  Range rx, ry;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DimensionError("series '" + s.name + "': x and y lengths differ");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      rx.add(s.x[i]);
      ry.add(ty(s.y[i]));
    }
  }
  rx.pad();
  ry.pad();
  auto px = [&](double x) { return left + (x - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto py = [&](double y) { return top + ph - (ty(y) - ry.lo) / (ry.hi - ry.lo) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\"" << o.height
      << "\" viewBox=\"0 0 " << o.width << ' ' << o.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!o.title.empty()) {
    svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << escape(o.title) << "</text>\n";
  }
  svg << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  std::ostringstream labels;
  const double xs = nice_step(rx.lo, rx.hi, 6);
  for (double v = std::ceil(rx.lo / xs) * xs; v <= rx.hi + 1e-9 * xs; v += xs) {
    svg << "<line x1=\"" << fmt(px(v)) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(px(v)) << "\" y2=\""
        << fmt(top + ph) << "\"/>\n";
    labels << "<text x=\"" << fmt(px(v)) << "\" y=\"" << fmt(top + ph + 16) << "\" text-anchor=\"middle\">"
           << fmt(std::abs(v) < 1e-12 * xs ? 0.0 : v, 4) << "</text>\n";
  }
  const double ys = nice_step(ry.lo, ry.hi, 5);
  for (double v = std::ceil(ry.lo / ys) * ys; v <= ry.hi + 1e-9 * ys; v += ys) {
    const double yv = o.log_y ? std::pow(10.0, v) : v;
    svg << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(py(yv)) << "\" x2=\"" << fmt(left + pw) << "\" y2=\""
        << fmt(py(yv)) << "\"/>\n";
    labels << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\">"
           << fmt(std::abs(yv) < 1e-12 * ys ? 0.0 : yv, 4) << "</text>\n";
  }
  svg << "</g>\n";
  svg << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << labels.str();
  svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(o.height - 12.0)
      << "\" text-anchor=\"middle\">" << escape(o.x_label) << "</text>\n";
  svg << "<text transform=\"translate(16 " << fmt(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(o.y_label) << (o.log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      svg << (first ? "" : " ") << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i]));
      first = false;
    }
    svg << "\"><title>" << escape(s.name) << "</title></polyline>\n";
    if (series.size() > 1) {
      const double ly = top + 12 + 18.0 * static_cast<double>(k);
      const double lx = left + pw + 12;
      svg << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << fmt(lx + 20) << "\" y2=\""
          << fmt(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << fmt(lx + 26) << "\" y=\"" << fmt(ly) << "\">" << escape(s.name) << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string plot_csv_svg(const CsvTable& table, const std::string& x_column, std::vector<std::string> y_columns,
                         ChartOptions options) {
  if (y_columns.empty()) {
    for (const auto& h : table.header) {
      if (h != x_column) y_columns.push_back(h);
    }
  }
  if (y_columns.empty()) throw ConfigError("plot: no y columns");
  const auto x = table.numbers(x_column);
  std::vector<Series> series;
  for (const auto& c : y_columns) series.push_back({c, x, table.numbers(c)});
  if (options.x_label.empty()) options.x_label = x_column;
  if (options.y_label.empty() && y_columns.size() == 1) options.y_label = y_columns.front();
  return line_chart_svg(series, options);
}

}  // namespace spot::eval
