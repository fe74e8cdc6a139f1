#include <anyk/project.hpp>

namespace anyk {

NotFreeConnexError::NotFreeConnexError(std::vector<std::string> residue_)
    : std::runtime_error([&] {
          std::string m = "query head drops variables but is not free-connex; "
                          "irreducible after head extension:";
          for (auto& r : residue_) m += " " + r;
          return m;
      }()),
      residue(std::move(residue_)) {}

}  // namespace anyk
