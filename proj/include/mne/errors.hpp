#ifndef MNE_ERRORS_HPP
#define MNE_ERRORS_HPP

#include <stdexcept>

namespace mne {

// Shared error taxonomy. Every failure path in the library throws one of
// these so callers can tell bad shapes from bad data from bad files.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error { using Error::Error; };            // dimension mismatch
struct DegenerateInputError : Error { using Error::Error; };  // zero vector, empty set, bad range
struct CapacityError : Error { using Error::Error; };         // not enough entries/classes
struct LookupError : Error { using Error::Error; };           // unknown id / out-of-range label
struct NumericError : Error { using Error::Error; };          // non-finite value
struct StateError : Error { using Error::Error; };            // missing cache / ground truth
struct FormatError : Error { using Error::Error; };           // malformed file

}  // namespace mne

#endif  // MNE_ERRORS_HPP
