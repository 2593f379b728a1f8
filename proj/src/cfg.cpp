#include "hoc/cfg.hpp"

namespace hoc {

namespace {

struct Walker {
  std::size_t bound;
  std::vector<CfgPath> done;

  // Extends every path in `live` through `s`; paths that hit break/continue/exit
  // are moved to `done`.
  std::vector<CfgPath> walk(const Stmt& s, std::vector<CfgPath> live) {
    if (live.empty()) return live;
    switch (s.kind) {
      case Stmt::Kind::Seq:
        for (const auto& c : s.body) live = walk(c, std::move(live));
        return live;
      case Stmt::Kind::If: {
        std::vector<CfgPath> out;
        for (int b = 0; b < 2; ++b) {
          std::vector<CfgPath> arm = live;
          for (auto& p : arm) {
            p.steps.push_back(PathStep{&s, b});
            p.branch_conds.emplace_back(s.exprs[0], b == 0);
          }
          arm = walk(s.body[static_cast<std::size_t>(b)], std::move(arm));
          for (auto& p : arm) out.push_back(std::move(p));
          check(out.size());
        }
        return out;
      }
      case Stmt::Kind::Break:
      case Stmt::Kind::Continue:
      case Stmt::Kind::Exit: {
        for (auto& p : live) {
          p.steps.push_back(PathStep{&s, -1});
          p.stmts.push_back(&s);
          p.end = s.kind == Stmt::Kind::Break      ? CfgPath::End::Break
                  : s.kind == Stmt::Kind::Continue ? CfgPath::End::Continue
                                                   : CfgPath::End::Exit;
          done.push_back(std::move(p));
        }
        check(done.size());
        return {};
      }
      default:
        for (auto& p : live) {
          p.steps.push_back(PathStep{&s, -1});
          p.stmts.push_back(&s);
        }
        return live;
    }
  }

  void check(std::size_t k) const {
    if (k + done.size() > bound)
      throw PathExplosion("path explosion: more than " + std::to_string(bound) +
                          " control-flow paths");
  }
};

}  // namespace

std::vector<CfgPath> cfg_paths(const Stmt& body, std::size_t bound) {
  Walker w{bound, {}};
  auto rest = w.walk(body, {CfgPath{}});
  for (auto& p : rest) w.done.push_back(std::move(p));
  w.check(0);
  return std::move(w.done);
}

}  // namespace hoc
