#pragma once

namespace coreg {

const char* version();

}  // namespace coreg
