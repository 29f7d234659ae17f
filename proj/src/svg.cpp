#include "srl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace srl {
namespace svg {

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool valid() const { return lo <= hi; }
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

// Axis mapping with optional log10 transform.
struct AxisMap {
  bool log = false;
  double lo = 0.0, hi = 1.0;  // transformed bounds
  double px0 = 0.0, px1 = 1.0;

  double transform(double v) const { return log ? std::log10(v) : v; }
  bool usable(double v) const {
    return std::isfinite(v) && (!log || v > 0.0);
  }
  double to_px(double v) const {
    const double t = transform(v);
    const double s = hi > lo ? (t - lo) / (hi - lo) : 0.5;
    return px0 + s * (px1 - px0);
  }
};

AxisMap make_axis(const Range& r, bool log, double px0, double px1) {
  AxisMap ax;
  ax.log = log;
  double lo = r.valid() ? r.lo : (log ? 0.1 : 0.0);
  double hi = r.valid() ? r.hi : 1.0;
  if (log) {
    lo = std::log10(std::max(lo, 1e-300));
    hi = std::log10(std::max(hi, 1e-300));
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.04 * (hi - lo);
  ax.lo = lo - pad;
  ax.hi = hi + pad;
  ax.px0 = px0;
  ax.px1 = px1;
  return ax;
}

std::vector<double> axis_ticks(const AxisMap& ax) {
  std::vector<double> ticks;
  if (ax.log) {
    for (int k = static_cast<int>(std::ceil(ax.lo));
         k <= static_cast<int>(std::floor(ax.hi)); ++k)
      ticks.push_back(std::pow(10.0, k));
    if (ticks.size() < 2) {
      // fall back to a few points inside the window
      for (int i = 0; i <= 3; ++i)
        ticks.push_back(std::pow(10.0, ax.lo + (ax.hi - ax.lo) * i / 3.0));
    }
  } else {
    const double span = ax.hi - ax.lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0}) {
      if (raw <= mult * mag) {
        step = mult * mag;
        break;
      }
    }
    for (double t = std::ceil(ax.lo / step) * step; t <= ax.hi + 1e-12;
         t += step)
      ticks.push_back(t);
  }
  return ticks;
}

std::string tick_label(double v, bool log) {
  std::ostringstream ss;
  if (log) {
    const double e = std::log10(v);
    const double re = std::round(e);
    if (std::abs(e - re) < 1e-9) {
      ss << "1e" << static_cast<int>(re);
      return ss.str();
    }
  }
  ss.precision(3);
  ss << v;
  return ss.str();
}

std::string heat_color(double v) {
  // white-to-blue ramp
  v = std::clamp(v, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 - 200 * v));
  const int g = static_cast<int>(std::lround(255 - 140 * v));
  const int b = 255;
  std::ostringstream ss;
  ss << "rgb(" << r << ',' << g << ',' << b << ')';
  return ss.str();
}

void render_into(std::ostringstream& out, const Plot& p, double x_off,
                 double y_off, int width, int height) {
  const double ml = 58, mr = 14, mt = 26, mb = 40;
  const double px0 = x_off + ml, px1 = x_off + width - mr;
  const double py0 = y_off + height - mb, py1 = y_off + mt;  // y grows upward

  Range rx, ry;
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (p.x_log && s.x[i] <= 0.0) continue;
      if (p.y_log && s.y[i] <= 0.0) continue;
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        rx.add(s.x[i]);
        ry.add(s.y[i]);
      }
    }
  for (const auto& c : p.heat) {
    rx.add(c.x);
    ry.add(c.y);
  }
  for (const auto& l : p.ref_lines) {
    if (l.kind == RefLine::Vertical) rx.add(l.value);
    if (l.kind == RefLine::Horizontal) ry.add(l.value);
  }

  AxisMap ax = make_axis(rx, p.x_log, px0, px1);
  AxisMap ay = make_axis(ry, p.y_log, py0, py1);

  out << "<rect x='" << num(px0) << "' y='" << num(py1) << "' width='"
      << num(px1 - px0) << "' height='" << num(py0 - py1)
      << "' fill='white' stroke='#333333' stroke-width='0.8'/>\n";

  // heatmap cells (geometric/linear midpoints as cell edges)
  if (!p.heat.empty()) {
    std::set<double> xs_set, ys_set;
    for (const auto& c : p.heat) {
      xs_set.insert(c.x);
      ys_set.insert(c.y);
    }
    std::vector<double> xs(xs_set.begin(), xs_set.end());
    std::vector<double> ys(ys_set.begin(), ys_set.end());
    auto edges = [&](const std::vector<double>& v, bool log) {
      std::vector<double> e(v.size() + 1);
      auto mid = [&](double a, double b) {
        return log ? std::sqrt(a * b) : 0.5 * (a + b);
      };
      for (std::size_t i = 1; i < v.size(); ++i) e[i] = mid(v[i - 1], v[i]);
      if (v.size() >= 2) {
        e[0] = log ? v[0] * v[0] / e[1] : 2 * v[0] - e[1];
        e[v.size()] = log ? v.back() * v.back() / e[v.size() - 1]
                          : 2 * v.back() - e[v.size() - 1];
      } else {
        e[0] = log ? v[0] / 1.2 : v[0] - 0.5;
        e[v.size()] = log ? v[0] * 1.2 : v[0] + 0.5;
      }
      return e;
    };
    const auto ex = edges(xs, p.x_log);
    const auto ey = edges(ys, p.y_log);
    auto find_idx = [](const std::vector<double>& v, double t) {
      return static_cast<std::size_t>(
          std::lower_bound(v.begin(), v.end(), t) - v.begin());
    };
    for (const auto& c : p.heat) {
      if (c.missing) continue;  // white background already
      const std::size_t i = find_idx(xs, c.x);
      const std::size_t j = find_idx(ys, c.y);
      const double xa = ax.to_px(ex[i]), xb = ax.to_px(ex[i + 1]);
      const double ya = ay.to_px(ey[j]), yb = ay.to_px(ey[j + 1]);
      out << "<rect x='" << num(std::min(xa, xb)) << "' y='"
          << num(std::min(ya, yb)) << "' width='" << num(std::abs(xb - xa))
          << "' height='" << num(std::abs(yb - ya)) << "' fill='"
          << heat_color(c.value) << "'/>\n";
    }
  }

  // axes ticks
  for (double t : axis_ticks(ax)) {
    const double x = ax.to_px(t);
    if (x < px0 - 0.5 || x > px1 + 0.5) continue;
    out << "<line x1='" << num(x) << "' y1='" << num(py0) << "' x2='" << num(x)
        << "' y2='" << num(py0 + 4) << "' stroke='#333333'/>\n";
    out << "<text x='" << num(x) << "' y='" << num(py0 + 16)
        << "' font-size='10' text-anchor='middle'>"
        << escape(tick_label(t, p.x_log)) << "</text>\n";
  }
  for (double t : axis_ticks(ay)) {
    const double y = ay.to_px(t);
    if (y > py0 + 0.5 || y < py1 - 0.5) continue;
    out << "<line x1='" << num(px0 - 4) << "' y1='" << num(y) << "' x2='"
        << num(px0) << "' y2='" << num(y) << "' stroke='#333333'/>\n";
    out << "<text x='" << num(px0 - 6) << "' y='" << num(y + 3)
        << "' font-size='10' text-anchor='end'>"
        << escape(tick_label(t, p.y_log)) << "</text>\n";
  }

  // reference lines
  for (const auto& l : p.ref_lines) {
    out << "<g stroke='" << l.color << "' stroke-dasharray='4,3'>";
    if (l.kind == RefLine::Vertical) {
      const double x = ax.to_px(l.value);
      out << "<line x1='" << num(x) << "' y1='" << num(py0) << "' x2='"
          << num(x) << "' y2='" << num(py1) << "'/>";
    } else if (l.kind == RefLine::Horizontal) {
      const double y = ay.to_px(l.value);
      out << "<line x1='" << num(px0) << "' y1='" << num(y) << "' x2='"
          << num(px1) << "' y2='" << num(y) << "'/>";
    } else {
      // y = x in data space, drawn between the axis windows
      const double lo = std::max(ax.lo, ay.lo);
      const double hi = std::min(ax.hi, ay.hi);
      if (lo < hi) {
        auto back = [&](double t) { return p.x_log ? std::pow(10.0, t) : t; };
        out << "<line x1='" << num(ax.to_px(back(lo))) << "' y1='"
            << num(ay.to_px(back(lo))) << "' x2='" << num(ax.to_px(back(hi)))
            << "' y2='" << num(ay.to_px(back(hi))) << "'/>";
      }
    }
    out << "</g>\n";
  }

  // series
  for (const auto& s : p.series) {
    out << "<path fill='none' stroke='" << s.color << "' stroke-width='"
        << num(s.width) << "'";
    if (s.dashed) out << " stroke-dasharray='6,3'";
    out << " d='";
    bool pen_down = false;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) {
        pen_down = false;
        continue;
      }
      out << (pen_down ? 'L' : 'M') << num(ax.to_px(s.x[i])) << ' '
          << num(ay.to_px(s.y[i]));
      pen_down = true;
    }
    out << "'/>\n";
  }

  // legend
  if (p.legend && !p.series.empty()) {
    double ly = py1 + 12;
    for (const auto& s : p.series) {
      if (s.label.empty()) continue;
      out << "<line x1='" << num(px1 - 120) << "' y1='" << num(ly) << "' x2='"
          << num(px1 - 96) << "' y2='" << num(ly) << "' stroke='" << s.color
          << "' stroke-width='" << num(s.width) << "'";
      if (s.dashed) out << " stroke-dasharray='6,3'";
      out << "/><text x='" << num(px1 - 92) << "' y='" << num(ly + 3)
          << "' font-size='10'>" << escape(s.label) << "</text>\n";
      ly += 13;
    }
  }

  // labels and title
  out << "<text x='" << num((px0 + px1) / 2) << "' y='" << num(y_off + 14)
      << "' font-size='12' text-anchor='middle'>" << escape(p.title)
      << "</text>\n";
  out << "<text x='" << num((px0 + px1) / 2) << "' y='" << num(py0 + 32)
      << "' font-size='11' text-anchor='middle'>" << escape(p.x_label)
      << "</text>\n";
  out << "<text x='" << num(x_off + 14) << "' y='" << num((py0 + py1) / 2)
      << "' font-size='11' text-anchor='middle' transform='rotate(-90 "
      << num(x_off + 14) << ' ' << num((py0 + py1) / 2) << ")'>"
      << escape(p.y_label) << "</text>\n";
}

}  // namespace

std::string render(const Plot& plot, int width, int height) {
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "' font-family='sans-serif'>\n";
  render_into(out, plot, 0, 0, width, height);
  out << "</svg>\n";
  return out.str();
}

std::string render_grid(const std::vector<Plot>& facets, int cols,
                        int cell_width, int cell_height) {
  const int rows =
      static_cast<int>((facets.size() + static_cast<std::size_t>(cols) - 1) /
                       static_cast<std::size_t>(cols));
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << cols * cell_width
      << "' height='" << rows * cell_height << "' font-family='sans-serif'>\n";
  for (std::size_t i = 0; i < facets.size(); ++i) {
    const int r = static_cast<int>(i) / cols;
    const int c = static_cast<int>(i) % cols;
    render_into(out, facets[i], c * cell_width, r * cell_height, cell_width,
                cell_height);
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace svg
}  // namespace srl
