#include "simcim/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace simcim {

double linear_pbar(Index t, Index total) {
  return 1.0 - static_cast<double>(t) / static_cast<double>(total);
}

double tanh_p(Index t, Index total, const TanhScheduleParams& params) {
  if (total <= 0) throw std::invalid_argument("tanh_p: total iterations must be positive");
  const double x = static_cast<double>(t) / static_cast<double>(total) - 0.5;
  return params.row_norm * params.scale * (std::tanh(params.slope * x) + params.shift);
}

double action_increment(Action action, double pdelta) {
  switch (action) {
    case Action::decrease:
      return -pdelta;
    case Action::hold:
      return 0.0;
    case Action::increase:
      return pdelta;
  }
  throw std::invalid_argument("unknown action");
}

double apply_action(double pbar_prev, double increment, Index interval, Index total) {
  const double decrement = static_cast<double>(interval) / static_cast<double>(total);
  return std::clamp(pbar_prev + increment - decrement, kPbarMin, kPbarMax);
}

double interpolate(double pbar_prev, double pbar_next, Index k, Index interval) {
  return pbar_prev +
         (static_cast<double>(k) / static_cast<double>(interval)) * (pbar_next - pbar_prev);
}

AnchorState advance_anchor(const AnchorState& state, double increment, Index interval,
                           Index total) {
  const Index next = state.step + 1;
  const double base = linear_pbar(next * interval, total);
  AnchorState out;
  out.step = next;
  // base + 0.0 == base, so an all-hold sequence never drifts off the line
  out.pbar = std::clamp(base + (state.excursion + increment), kPbarMin, kPbarMax);
  out.excursion = out.pbar - base;
  return out;
}

namespace {

struct ValueVisitor {
  Index t;
  Index total;
  double operator()(const LinearSchedule&) const { return linear_pbar(t, total); }
  double operator()(const TanhSchedule& s) const { return tanh_p(t, total, s.params); }
  double operator()(const PiecewiseSchedule& s) const {
    if (s.anchors.empty()) throw std::invalid_argument("piecewise schedule has no anchors");
    const Index k = t / s.interval;
    const Index j = t % s.interval;
    const auto last = static_cast<Index>(s.anchors.size()) - 1;
    if (k >= last) return s.anchors.back();
    return interpolate(s.anchors[k], s.anchors[k + 1], j, s.interval);
  }
};

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

bool is_normalized(const Schedule& schedule) {
  return !std::holds_alternative<TanhSchedule>(schedule);
}

double schedule_value(const Schedule& schedule, Index t, Index total) {
  return std::visit(ValueVisitor{t, total}, schedule);
}

std::string serialize_schedule(const Schedule& schedule) {
  std::ostringstream out;
  if (std::holds_alternative<LinearSchedule>(schedule)) {
    out << "type = linear\n";
  } else if (const auto* tanh = std::get_if<TanhSchedule>(&schedule)) {
    out << "type = tanh\n"
        << "O = " << format_double(tanh->params.scale) << '\n'
        << "S = " << format_double(tanh->params.slope) << '\n'
        << "D = " << format_double(tanh->params.shift) << '\n'
        << "Jm = " << format_double(tanh->params.row_norm) << '\n';
  } else {
    const auto& pw = std::get<PiecewiseSchedule>(schedule);
    out << "type = piecewise\n"
        << "interval = " << pw.interval << '\n'
        << "anchors =";
    for (double a : pw.anchors) out << ' ' << format_double(a);
    out << '\n';
  }
  return out.str();
}

Schedule parse_schedule(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  const auto type = kv["type"];
  auto number = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument("schedule is missing key '" + key + "'");
    return std::stod(it->second);
  };
  if (type == "linear") return LinearSchedule{};
  if (type == "tanh")
    return TanhSchedule{{number("O"), number("S"), number("D"), number("Jm")}};
  if (type == "piecewise") {
    PiecewiseSchedule pw;
    pw.interval = static_cast<Index>(number("interval"));
    std::istringstream anchors(kv["anchors"]);
    double a = 0;
    while (anchors >> a) pw.anchors.push_back(a);
    return pw;
  }
  throw std::invalid_argument("unknown schedule type '" + type + "'");
}

}  // namespace simcim
