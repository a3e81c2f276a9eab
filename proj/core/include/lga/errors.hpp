#pragma once

#include <stdexcept>
#include <string>

namespace lga {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define LGA_DEFINE_ERROR(name)                    \
    class name : public Error {                   \
    public:                                       \
        using Error::Error;                       \
    }

LGA_DEFINE_ERROR(EmptyBox);
LGA_DEFINE_ERROR(NoVisibleJoints);
LGA_DEFINE_ERROR(DimensionMismatch);
LGA_DEFINE_ERROR(ShapeError);
LGA_DEFINE_ERROR(NonFiniteLogits);
LGA_DEFINE_ERROR(IndexOutOfRange);
LGA_DEFINE_ERROR(ParseError);
LGA_DEFINE_ERROR(MissingImage);
LGA_DEFINE_ERROR(UnknownLabel);
LGA_DEFINE_ERROR(MissingPersonEvidence);
LGA_DEFINE_ERROR(EmptySplit);
LGA_DEFINE_ERROR(EmptyTable);
LGA_DEFINE_ERROR(ClassCountMismatch);
LGA_DEFINE_ERROR(IOError);

#undef LGA_DEFINE_ERROR

} // namespace lga
