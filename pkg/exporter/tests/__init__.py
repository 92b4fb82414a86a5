# Package marker: keeps these modules' import names distinct from the
# main library's test suite when both run in one pytest invocation.
