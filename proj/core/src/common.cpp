#include "supclust/common.hpp"

namespace supclust {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kArgument: return "argument error";
    case ErrorKind::kConfiguration: return "configuration error";
    case ErrorKind::kBudgetExhausted: return "budget exhausted";
    case ErrorKind::kMissingModel: return "missing model";
  }
  return "error";
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_euclidean(a, b));
}

}  // namespace supclust
