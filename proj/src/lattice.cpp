#include "fphi/lattice.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace fphi {

int next_friendly(int x) {
  if (x < 2) return 2;
  for (int m = x;; ++m) {
    int r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

namespace {
std::mutex table_mutex;
std::map<int, std::unique_ptr<ModeTable>> table_cache;

std::unique_ptr<ModeTable> build_table(int n) {
  auto t = std::make_unique<ModeTable>();
  t->trunc_n = n;
  t->side = 2 * n + 1;
  const int side = t->side;
  const std::size_t cube = static_cast<std::size_t>(side) * side * side;
  t->nsq.resize(cube);
  t->conj_idx.resize(cube);
  const double rsq = static_cast<double>(n) * n + 0.5;
  for (int i1 = 0; i1 < side; ++i1) {
    int n1 = i1 <= n ? i1 : i1 - side;
    for (int i2 = 0; i2 < side; ++i2) {
      int n2 = i2 <= n ? i2 : i2 - side;
      for (int i3 = 0; i3 < side; ++i3) {
        int n3 = i3 <= n ? i3 : i3 - side;
        int idx = (i1 * side + i2) * side + i3;
        t->nsq[idx] = static_cast<double>(n1) * n1 +
                      static_cast<double>(n2) * n2 +
                      static_cast<double>(n3) * n3;
        t->conj_idx[idx] = t->index_of(-n1, -n2, -n3);
        if (t->nsq[idx] <= rsq) {
          t->ball.push_back(idx);
          if (is_representative({n1, n2, n3}) || (n1 == 0 && n2 == 0 && n3 == 0))
            t->ball_rep.push_back(idx);
        }
      }
    }
  }
  return t;
}
} // namespace

const ModeTable& mode_table(int trunc_n) {
  std::lock_guard<std::mutex> lock(table_mutex);
  auto it = table_cache.find(trunc_n);
  if (it == table_cache.end())
    it = table_cache.emplace(trunc_n, build_table(trunc_n)).first;
  return *it->second;
}

} // namespace fphi
