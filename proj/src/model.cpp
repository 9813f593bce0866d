#include "aitsahalia/model.hpp"

#include <cstdio>

namespace aitsahalia {

std::string jump_label(const Jump& j) {
  switch (j.kind) {
    case JumpKind::Identity:
      return "x";
    case JumpKind::Sine:
      return "sin(x)";
    case JumpKind::LinearScale:
      break;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%gx", j.scale);
  return buf;
}

}  // namespace aitsahalia
