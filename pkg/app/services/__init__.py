# Protocol and simulation services package
