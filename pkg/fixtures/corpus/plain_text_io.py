with open("notes.txt", "w") as f:
    f.write("no images here")
print(open("notes.txt").read())
