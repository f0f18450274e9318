# Make storage a proper package
