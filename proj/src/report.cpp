#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "pgt/errors.hpp"
#include "pgt/experiment.hpp"

namespace pgt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void append_number(std::string& out, double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, res.ptr);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

// log10 of the relative gap against the iteration index, one polyline per variant.
std::string plot_svg(const RunReport& report) {
  constexpr double width = 720, height = 420, left = 70, right = 170, top = 20, bottom = 50;
  constexpr double floor_gap = 1e-16;
  const double f_star = report.oracle.f_star;

  std::size_t t_max = 1;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& v : report.variants) {
    t_max = std::max(t_max, v.trace.size());
    for (const auto& r : v.trace) {
      const double y = std::log10(std::max(relative_gap(r.gap, f_star), floor_gap));
      if (std::isfinite(y)) {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
    }
  }
  if (!(lo <= hi)) {
    lo = -1;
    hi = 0;
  }
  lo = std::floor(lo);
  hi = std::ceil(hi);
  if (hi <= lo) hi = lo + 1;

  const double pw = width - left - right, ph = height - top - bottom;
  const auto sx = [&](double t) { return left + pw * t / static_cast<double>(t_max); };
  const auto sy = [&](double y) { return top + ph * (hi - y) / (hi - lo); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double y = lo; y <= hi; y += 1) {
    s << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << sy(y) << "\" y2=\"" << sy(y)
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << left - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">1e" << y << "</text>\n";
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">iteration (max "
    << t_max << ")</text>\n";
  s << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
    << ")\" text-anchor=\"middle\">relative optimality gap</text>\n";

  std::size_t k = 0;
  for (const auto& v : report.variants) {
    const char* color = kPalette[k % std::size(kPalette)];
    const std::size_t stride = std::max<std::size_t>(1, v.trace.size() / 1000);
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < v.trace.size(); i += stride) {
      const auto& r = v.trace[i];
      const double y = std::log10(std::max(relative_gap(r.gap, f_star), floor_gap));
      if (std::isfinite(y)) s << sx(static_cast<double>(r.t)) << "," << sy(y) << " ";
    }
    s << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(k + 1);
    s << "<line x1=\"" << left + pw + 10 << "\" x2=\"" << left + pw + 30 << "\" y1=\"" << ly - 4 << "\" y2=\""
      << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << left + pw + 36 << "\" y=\"" << ly << "\">" << v.name << "</text>\n";
    ++k;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

std::string trace_csv(const std::vector<IterTrace>& trace) {
  std::string out = "iter,cost,gap,consensus_residual,tracking_residual\n";
  out.reserve(out.size() + trace.size() * 96);
  for (const auto& r : trace) {
    out += std::to_string(r.t);
    for (double x : {r.cost, r.gap, r.consensus_residual, r.tracking_residual}) {
      out += ',';
      append_number(out, x);
    }
    out += '\n';
  }
  return out;
}

json summary_json(const RunReport& report) {
  const auto& o = report.oracle;
  json variants = json::array();
  for (const auto& v : report.variants) {
    json entry = {
        {"name", v.name},
        {"quantizer", std::string(to_string(v.quantizer.kind))},
        {"rho", v.quantizer.level},
        {"iterations", v.trace.size()},
        {"csv", "trace_" + v.name + ".csv"},
        {"wall_seconds", v.wall_seconds},
        {"worst_x_conservation", v.worst_x_conservation},
        {"worst_z_conservation", v.worst_z_conservation},
        {"worst_tracking", v.worst_tracking},
    };
    if (!v.trace.empty()) {
      const auto& last = v.trace.back();
      entry["final"] = {{"cost", number_or_null(last.cost)},
                        {"gap", number_or_null(last.gap)},
                        {"relative_gap", number_or_null(relative_gap(last.gap, o.f_star))},
                        {"consensus_residual", number_or_null(last.consensus_residual)},
                        {"tracking_residual", number_or_null(last.tracking_residual)}};
    }
    variants.push_back(std::move(entry));
  }
  return {
      {"config", report.config},
      {"oracle",
       {{"f_star", o.f_star},
        {"method", std::string(to_string(o.method))},
        {"grad_norm_at_solution", o.grad_norm_at_solution},
        {"converged", o.converged},
        {"iterations", o.iterations},
        {"condition_estimate", o.condition_estimate},
        {"ill_conditioned", o.ill_conditioned}}},
      {"lambda2_abs", report.lambda2_abs},
      {"eta", report.eta},
      {"alpha", report.alpha},
      {"variants", std::move(variants)},
  };
}

std::vector<fs::path> write_outputs(const RunReport& report, const fs::path& dir, bool plot) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  std::vector<fs::path> written;
  for (const auto& v : report.variants) {
    const fs::path path = dir / ("trace_" + v.name + ".csv");
    write_file(path, trace_csv(v.trace));
    written.push_back(path);
  }
  const fs::path summary = dir / "summary.json";
  write_file(summary, summary_json(report).dump(2) + "\n");
  written.push_back(summary);
  if (plot) {
    const fs::path svg = dir / "plot.svg";
    write_file(svg, plot_svg(report));
    written.push_back(svg);
  }
  return written;
}

}  // namespace pgt
