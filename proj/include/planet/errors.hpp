#pragma once

#include <stdexcept>
#include <string>

namespace planet {

/// Root of every error the library raises. The CLI maps the category to an
/// exit code, so each concrete error declares which family it belongs to.
class Error : public std::runtime_error {
public:
    enum class Category { Usage, Data, Numeric };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

#define PLANET_DEFINE_ERROR(Name, Cat)                                        \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what)                                \
            : Error(Category::Cat, what) {}                                   \
    };

// shape / contract violations inside the numeric core
PLANET_DEFINE_ERROR(DimensionError, Numeric)
PLANET_DEFINE_ERROR(DegenerateInputError, Numeric)
PLANET_DEFINE_ERROR(ContractError, Numeric)
PLANET_DEFINE_ERROR(NumericError, Numeric)
PLANET_DEFINE_ERROR(DomainError, Numeric)

// input data and file formats
PLANET_DEFINE_ERROR(FormatError, Data)
PLANET_DEFINE_ERROR(UnsupportedError, Data)
PLANET_DEFINE_ERROR(LengthError, Data)
PLANET_DEFINE_ERROR(ParseError, Data)
PLANET_DEFINE_ERROR(ValidationError, Data)
PLANET_DEFINE_ERROR(ConfigError, Data)
PLANET_DEFINE_ERROR(CorruptionError, Data)
PLANET_DEFINE_ERROR(DataError, Data)
PLANET_DEFINE_ERROR(IoError, Data)

// command-line misuse
PLANET_DEFINE_ERROR(UsageError, Usage)

#undef PLANET_DEFINE_ERROR

}  // namespace planet
