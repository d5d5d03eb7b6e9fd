#ifndef SSLBENCH_EVAL_METRICS_HPP
#define SSLBENCH_EVAL_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sslbench/core/errors.hpp"
#include "sslbench/core/linalg.hpp"

namespace sslbench {

// Entry (i, j) counts samples with true class i predicted as class j.
inline Mat confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                            int num_classes) {
    if (num_classes < 1) throw UsageError("confusion_matrix: num_classes must be >= 1");
    if (y_true.size() != y_pred.size()) {
        throw UsageError("confusion_matrix: y_true and y_pred lengths differ");
    }
    Mat m(num_classes, num_classes);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || t >= num_classes) {
            throw UsageError("confusion_matrix: true label " + std::to_string(t) +
                             " out of range at sample " + std::to_string(i));
        }
        if (p < 0 || p >= num_classes) {
            throw UsageError("confusion_matrix: predicted label " + std::to_string(p) +
                             " out of range at sample " + std::to_string(i));
        }
        m(t, p) += 1.0;
    }
    return m;
}

// Rows with no samples stay all-zero rather than dividing by zero.
inline Mat row_normalize(const Mat& counts) {
    Mat out(counts.rows, counts.cols);
    for (std::int64_t i = 0; i < counts.rows; ++i) {
        double total = 0.0;
        for (std::int64_t j = 0; j < counts.cols; ++j) total += counts(i, j);
        if (total <= 0.0) continue;
        for (std::int64_t j = 0; j < counts.cols; ++j) out(i, j) = counts(i, j) / total;
    }
    return out;
}

// Unweighted mean of per-class recalls, i.e. the mean of the row-normalized
// confusion diagonal over classes that actually appear in y_true. Classes
// absent from y_true are excluded and reported through `warnings`.
inline double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                int num_classes, std::vector<std::string>* warnings = nullptr) {
    if (y_true.empty()) throw UsageError("balanced_accuracy: empty label vectors");
    const Mat m = confusion_matrix(y_true, y_pred, num_classes);
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < num_classes; ++c) {
        double row = 0.0;
        for (int j = 0; j < num_classes; ++j) row += m(c, j);
        if (row <= 0.0) {
            if (warnings) {
                warnings->push_back("balanced_accuracy: class " + std::to_string(c) +
                                    " absent from y_true; excluded");
            }
            continue;
        }
        sum += m(c, c) / row;
        ++present;
    }
    if (present == 0) throw UsageError("balanced_accuracy: no class present in y_true");
    return sum / present;
}

inline double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                std::vector<std::string>* warnings = nullptr) {
    int hi = -1;
    for (int v : y_true) hi = v > hi ? v : hi;
    for (int v : y_pred) hi = v > hi ? v : hi;
    return balanced_accuracy(y_true, y_pred, hi + 1, warnings);
}

}  // namespace sslbench

#endif
