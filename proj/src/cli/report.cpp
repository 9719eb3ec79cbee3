#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dmvcr/cli.hpp"
#include "dmvcr/errors.hpp"

namespace dmvcr {
namespace {

constexpr double kWidth = 640, kHeight = 360;
constexpr double kLeft = 64, kRight = 24, kTop = 40, kBottom = 48;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void open_svg(std::ostringstream& s, const std::string& title) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(title) << "</text>\n";
}

void axes(std::ostringstream& s, double y_lo, double y_hi, const std::string& x_label) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  s << "<path d=\"M" << x0 << ' ' << y1 << " V" << y0 << " H" << x1
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = y_lo + (y_hi - y_lo) * k / 4.0;
    const double y = y0 - (y0 - y1) * k / 4.0;
    s << "<line x1=\"" << x0 - 4 << "\" y1=\"" << y << "\" x2=\"" << x0 << "\" y2=\"" << y
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << x0 - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << num(v)
      << "</text>\n";
  }
  s << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12
    << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
}

}  // namespace

std::string render_loss_svg(const TrainingLog& log) {
  if (log.records.empty()) throw ContractError("render_loss_svg: empty log");
  double lo = log.records.front().loss, hi = lo;
  for (const auto& r : log.records) {
    lo = std::min(lo, r.loss);
    hi = std::max(hi, r.loss);
  }
  lo = std::min(lo, 0.0);
  if (hi <= lo) hi = lo + 1.0;

  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double steps = static_cast<double>(std::max<std::size_t>(log.records.size() - 1, 1));
  auto px = [&](double i) { return x0 + (x1 - x0) * i / steps; };
  auto py = [&](double v) { return y0 - (y0 - y1) * (v - lo) / (hi - lo); };

  std::ostringstream s;
  open_svg(s, "Training loss");
  axes(s, lo, hi, "batch (" + std::to_string(log.records.size()) + " total)");
  s << "<polyline fill=\"none\" stroke=\"#4a7ab5\" stroke-width=\"1\" points=\"";
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    s << num(px(static_cast<double>(i))) << ',' << num(py(log.records[i].loss)) << ' ';
  }
  s << "\"/>\n";

  // Epoch means sit at the last batch of their epoch.
  std::vector<std::pair<double, double>> means;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    total += log.records[i].loss;
    ++count;
    if (i + 1 == log.records.size() || log.records[i + 1].epoch != log.records[i].epoch) {
      means.emplace_back(static_cast<double>(i), total / static_cast<double>(count));
      total = 0.0;
      count = 0;
    }
  }
  s << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
  for (const auto& [i, m] : means) s << num(px(i)) << ',' << num(py(m)) << ' ';
  s << "\"/>\n";
  s << "<text x=\"" << x1 << "\" y=\"" << kTop - 4 << "\" text-anchor=\"end\" fill=\"#c0392b\">"
    << "epoch mean</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string render_bars_svg(const std::vector<std::pair<std::string, double>>& bars,
                            const std::string& title) {
  if (bars.empty()) throw ContractError("render_bars_svg: nothing to draw");
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const double slot = (x1 - x0) / static_cast<double>(bars.size());
  std::ostringstream s;
  open_svg(s, title);
  axes(s, 0.0, 1.0, "");
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double v = std::clamp(bars[i].second, 0.0, 1.0);
    const double h = (y0 - y1) * v;
    const double x = x0 + slot * static_cast<double>(i) + slot * 0.2;
    s << "<rect x=\"" << num(x) << "\" y=\"" << num(y0 - h) << "\" width=\"" << num(slot * 0.6)
      << "\" height=\"" << num(h) << "\" fill=\"#4a7ab5\"/>\n"
      << "<text x=\"" << num(x + slot * 0.3) << "\" y=\"" << num(y0 - h - 6)
      << "\" text-anchor=\"middle\">" << num(bars[i].second) << "</text>\n"
      << "<text x=\"" << num(x + slot * 0.3) << "\" y=\"" << y0 + 16
      << "\" text-anchor=\"middle\">" << escape(bars[i].first) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

TrainingLog read_loss_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read loss log " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kLossLogHeader) {
    throw ParseError(path.string() + ":1: expected header '" + std::string(kLossLogHeader) + "'");
  }
  TrainingLog log;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    LogRecord r;
    char val[64] = {0};
    int consumed = 0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%lf,%n", &r.epoch, &r.batch, &r.loss, &consumed) < 3 ||
        consumed == 0) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed loss row");
    }
    const std::string rest = line.substr(static_cast<std::size_t>(consumed));
    if (!rest.empty()) {
      double v = 0.0;
      if (std::sscanf(rest.c_str(), "%lf%63s", &v, val) != 1) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed val_qa_acc");
      }
      r.val_qa_acc = v;
    }
    log.records.push_back(r);
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    total += log.records[i].loss;
    ++count;
    if (i + 1 == log.records.size() || log.records[i + 1].epoch != log.records[i].epoch) {
      log.epoch_losses.push_back(total / static_cast<double>(count));
      total = 0.0;
      count = 0;
    }
  }
  return log;
}

}  // namespace dmvcr
