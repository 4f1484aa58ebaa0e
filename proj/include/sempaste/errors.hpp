#pragma once

#include <stdexcept>
#include <string>

namespace sempaste {

// Bad command line / unusable arguments. Exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data. Exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem / codec failures. Exit code 3.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A dataset label that resolves neither directly nor through the
// substitution table. Carries the raw label.
struct UnresolvedLabelError : DataError {
  explicit UnresolvedLabelError(const std::string& raw_label)
      : DataError("unresolved label: \"" + raw_label +
                  "\" (not in embeddings and no substitution applies)"),
        label(raw_label) {}
  std::string label;
};

struct ConfigError : DataError {
  using DataError::DataError;
};

}  // namespace sempaste
