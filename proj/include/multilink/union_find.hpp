#pragma once

#include <numeric>
#include <vector>

namespace multilink {

class UnionFind {
  public:
    explicit UnionFind(int n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }

    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];  // halve the path
            x = parent_[x];
        }
        return x;
    }

    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }

    // Dense component ids numbered by smallest member.
    std::vector<int> components() {
        const int n = static_cast<int>(parent_.size());
        std::vector<int> comp(n, -1);
        int next = 0;
        for (int i = 0; i < n; ++i) {
            int root = find(i);
            if (comp[root] == -1) comp[root] = next++;
            comp[i] = comp[root];
        }
        return comp;
    }

  private:
    std::vector<int> parent_;
    std::vector<int> rank_;
};

}  // namespace multilink
