path = 'C:\\data\\#1'  # windows path
msg = "it's # fine"
## double hash header
x = 1
    # indented comment
y = 2  # trailing one
# trailing two is a separate whole-line comment
