#include "dmd/message.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dmd {

std::size_t AgentMessage::dimension() const {
  return 1 + y_under.size() + n.size() + q.size() + p1.size() + p2.size() + w.size() + z1.size() +
         z2.size() + a1.size() + a2.size();
}

namespace {

std::vector<std::pair<std::string, double>> flatten(const AgentMessage& m) {
  std::vector<std::pair<std::string, double>> out;
  for_each_component(m, [&](const std::string& key, const double& v) { out.emplace_back(key, v); });
  return out;
}

}  // namespace

double max_abs_diff(const AgentMessage& a, const AgentMessage& b) {
  auto fa = flatten(a);
  auto fb = flatten(b);
  if (fa.size() != fb.size()) throw std::invalid_argument("messages differ in shape");
  double worst = 0.0;
  for (std::size_t k = 0; k < fa.size(); ++k) {
    if (fa[k].first != fb[k].first) {
      throw std::invalid_argument("messages differ in shape at " + fa[k].first);
    }
    worst = std::max(worst, std::abs(fa[k].second - fb[k].second));
  }
  return worst;
}

double max_abs_diff(const MessageProfile& a, const MessageProfile& b) {
  if (a.size() != b.size()) throw std::invalid_argument("profiles differ in size");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    worst = std::max(worst, max_abs_diff(a.messages()[k], b.messages()[k]));
  }
  return worst;
}

}  // namespace dmd
