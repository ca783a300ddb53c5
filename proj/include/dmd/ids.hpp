#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <ostream>
#include <string>

namespace dmd {

// Dense 1-based identifiers. The tag keeps agent, group and link ids from
// being mixed up at call sites.
template <class Tag>
struct Id {
  int value = 0;

  constexpr Id() = default;
  constexpr explicit Id(int v) : value(v) {}

  constexpr auto operator<=>(const Id&) const = default;

  // Zero-based position in dense per-entity vectors.
  constexpr std::size_t index() const { return static_cast<std::size_t>(value - 1); }
};

struct AgentTag {};
struct GroupTag {};
struct LinkTag {};

using AgentId = Id<AgentTag>;
using GroupId = Id<GroupTag>;
using LinkId = Id<LinkTag>;

inline std::string to_string(AgentId a) { return std::to_string(a.value); }
inline std::string to_string(GroupId g) { return "g" + std::to_string(g.value); }
inline std::string to_string(LinkId l) { return "l" + std::to_string(l.value); }

template <class Tag>
std::ostream& operator<<(std::ostream& os, Id<Tag> id) {
  return os << to_string(id);
}

}  // namespace dmd

template <class Tag>
struct std::hash<dmd::Id<Tag>> {
  std::size_t operator()(dmd::Id<Tag> id) const noexcept { return std::hash<int>{}(id.value); }
};
