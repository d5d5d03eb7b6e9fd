#ifndef SSLBENCH_EVAL_PROTOCOL_HPP
#define SSLBENCH_EVAL_PROTOCOL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/rng.hpp"

namespace sslbench {

struct SplitSpec {
    double test_fraction = 0.3;
    std::uint64_t seed = 0;
};

struct DataSplit {
    std::vector<std::int64_t> train;  // indices into the source arrays, ascending
    std::vector<std::int64_t> test;
    std::vector<std::string> warnings;
};

namespace evaldetail {

// class id -> ascending member indices, rejecting negative labels
inline std::map<int, std::vector<std::int64_t>> group_by_class(const std::vector<int>& labels) {
    std::map<int, std::vector<std::int64_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) {
            throw UsageError("negative label at index " + std::to_string(i));
        }
        groups[labels[i]].push_back(static_cast<std::int64_t>(i));
    }
    return groups;
}

}  // namespace evaldetail

// Per-class test count is round(fraction * n_c) kept inside [1, n_c - 1],
// then nudged by at most one sample per class so the total matches
// round(fraction * n) over the splittable classes. Single-sample classes go
// wholly to train with a warning. Deterministic in the seed.
inline DataSplit stratified_split(const std::vector<int>& labels, const SplitSpec& spec) {
    if (labels.empty()) throw DataError("stratified_split: empty dataset");
    if (!(spec.test_fraction > 0.0) || !(spec.test_fraction < 1.0)) {
        throw ConfigError("stratified_split: test fraction must lie in (0, 1)");
    }
    const auto groups = evaldetail::group_by_class(labels);

    DataSplit out;
    struct Cell {
        int cls;
        const std::vector<std::int64_t>* idx;
        std::int64_t want;   // unadjusted rounded count
        std::int64_t take;   // final count
        double ideal;        // fraction * n_c
    };
    std::vector<Cell> cells;
    std::int64_t splittable_total = 0;
    for (const auto& [cls, idx] : groups) {
        const auto n_c = static_cast<std::int64_t>(idx.size());
        if (n_c == 1) {
            out.train.push_back(idx[0]);
            out.warnings.push_back("stratified_split: class " + std::to_string(cls) +
                                   " has a single sample; kept in train");
            continue;
        }
        const double ideal = spec.test_fraction * static_cast<double>(n_c);
        const std::int64_t want = std::clamp<std::int64_t>(std::llround(ideal), 1, n_c - 1);
        cells.push_back({cls, &idx, want, want, ideal});
        splittable_total += n_c;
    }
    if (cells.empty()) {
        std::sort(out.train.begin(), out.train.end());
        return out;
    }

    const std::int64_t target =
        std::llround(spec.test_fraction * static_cast<double>(splittable_total));
    std::int64_t total = 0;
    for (const auto& c : cells) total += c.take;

    // move the classes whose rounding strayed furthest, one sample each
    while (total != target) {
        const int dir = total < target ? +1 : -1;
        Cell* pick = nullptr;
        double best = 0.0;
        for (auto& c : cells) {
            if (c.take != c.want) continue;  // one adjustment per class
            const std::int64_t moved = c.take + dir;
            if (moved < 1 || moved > static_cast<std::int64_t>(c.idx->size()) - 1) continue;
            // deficit > 0 when the class is under its ideal share
            const double deficit = (c.ideal - static_cast<double>(c.take)) * dir;
            if (pick == nullptr || deficit > best) {
                pick = &c;
                best = deficit;
            }
        }
        if (pick == nullptr) {
            out.warnings.push_back("stratified_split: global test count " +
                                   std::to_string(total) + " (target " + std::to_string(target) +
                                   "); per-class bounds prevent further adjustment");
            break;
        }
        pick->take += dir;
        total += dir;
    }

    for (const auto& c : cells) {
        std::vector<std::int64_t> shuffled = *c.idx;
        Rng rng(derive_seed(spec.seed, "split", static_cast<std::uint64_t>(c.cls)));
        rng.shuffle(shuffled);
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(shuffled.size()); ++i) {
            (i < c.take ? out.test : out.train).push_back(shuffled[static_cast<std::size_t>(i)]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

// Uniformly draws min(n, n_c) members of each class from `pool` without
// replacement; the result is ascending and deterministic in the seed.
inline std::vector<std::int64_t> sample_n_per_class(const std::vector<int>& labels,
                                                    const std::vector<std::int64_t>& pool,
                                                    std::int64_t n, std::uint64_t seed) {
    if (n < 1) throw UsageError("sample_n_per_class: n must be >= 1");
    std::map<int, std::vector<std::int64_t>> groups;
    for (std::int64_t i : pool) {
        if (i < 0 || i >= static_cast<std::int64_t>(labels.size())) {
            throw UsageError("sample_n_per_class: pool index out of range");
        }
        const int cls = labels[static_cast<std::size_t>(i)];
        if (cls < 0) throw UsageError("sample_n_per_class: negative label in pool");
        groups[cls].push_back(i);
    }
    std::vector<std::int64_t> out;
    for (auto& [cls, idx] : groups) {
        Rng rng(derive_seed(seed, "sample", static_cast<std::uint64_t>(cls)));
        rng.shuffle(idx);
        const auto take = std::min<std::int64_t>(n, static_cast<std::int64_t>(idx.size()));
        out.insert(out.end(), idx.begin(), idx.begin() + take);
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct FilterResult {
    std::vector<std::int64_t> train;  // surviving indices, ascending
    std::vector<std::int64_t> test;
    std::vector<int> kept;     // original class ids, ascending
    std::vector<int> relabel;  // original id -> dense id, -1 when dropped
};

// Keeps classes with at least `min_train` training samples and re-indexes
// the survivors densely in their original order.
inline FilterResult filter_min_train(const std::vector<int>& labels, const DataSplit& split,
                                     std::int64_t min_train) {
    if (min_train < 1) throw ConfigError("filter_min_train: threshold must be >= 1");
    std::map<int, std::int64_t> counts;
    for (std::int64_t i : split.train) {
        const int cls = labels[static_cast<std::size_t>(i)];
        if (cls < 0) throw UsageError("filter_min_train: negative label");
        ++counts[cls];
    }
    FilterResult out;
    int hi = -1;
    for (const auto& [cls, cnt] : counts) {
        if (cnt >= min_train) out.kept.push_back(cls);
        hi = cls;
    }
    if (out.kept.size() < 2) {
        throw DataError("filter_min_train: fewer than 2 classes have >= " +
                        std::to_string(min_train) + " training samples");
    }
    out.relabel.assign(static_cast<std::size_t>(hi) + 1, -1);
    for (std::size_t k = 0; k < out.kept.size(); ++k) {
        out.relabel[static_cast<std::size_t>(out.kept[k])] = static_cast<int>(k);
    }
    auto keep = [&](std::int64_t i) {
        const int cls = labels[static_cast<std::size_t>(i)];
        return cls <= hi && out.relabel[static_cast<std::size_t>(cls)] >= 0;
    };
    for (std::int64_t i : split.train) {
        if (keep(i)) out.train.push_back(i);
    }
    for (std::int64_t i : split.test) {
        if (keep(i)) out.test.push_back(i);
    }
    return out;
}

}  // namespace sslbench

#endif
